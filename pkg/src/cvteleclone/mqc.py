"""Multiuser quantum channel (MQC) states.

The (M+1)-mode channel is built from two squeezed vacua mixed on a phase-free
beam splitter of angle ``theta0``; one output is kept as the sender's port
(mode 0), the other is spread over the receivers (modes 1..M) by an M-splitter
together with M-1 ancillas.  ``closed_form_covariance`` rebuilds the same state
directly from the Gaussian exponent of its Wigner function, which gives an
independent check of the circuit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import GaussianState
from .errors import DomainError, InvalidArgumentError, NumericalDegeneracyError

THETA_MARGIN = 1e-6


def theta_bounds(M: int) -> tuple[float, float]:
    """Closed interval of admissible ``theta0`` (radians); the endpoints need infinite squeezing."""
    lo = math.asin(1.0 / math.sqrt(M + 1))
    hi = math.asin(math.sqrt(M / (M + 1)))
    return lo, hi


def _check_M(M, minimum: int = 2):
    if isinstance(M, bool) or int(M) != M:
        raise InvalidArgumentError(f"M must be an integer, got {M!r}")
    if M < minimum:
        raise InvalidArgumentError(
            f"M = {M} is degenerate: need at least {minimum} receivers" if minimum == 2 else f"M must be >= {minimum}, got {M}"
        )


def solve_squeezing(M: int, theta0: float, margin: float = THETA_MARGIN) -> tuple[float, float]:
    """Squeezing parameters ``(r1, r2)`` of the two sources for a given mixing angle.

    ``e^{-2 r1} = (√M sinθ − cosθ)/(√M sinθ + cosθ)`` and
    ``e^{-2 r2} = (√M cosθ − sinθ)/(√M cosθ + sinθ)``.
    """
    _check_M(M)
    if not math.isfinite(theta0):
        raise DomainError(f"theta0 must be finite, got {theta0}")
    lo, hi = theta_bounds(M)
    if theta0 <= lo + margin:
        raise DomainError(
            f"theta0 = {theta0:.6g} violates the lower bound sin(theta0) > 1/sqrt(M+1) "
            f"(theta0 > {lo:.6g} rad for M = {M}); r1 would be infinite"
        )
    if theta0 >= hi - margin:
        raise DomainError(
            f"theta0 = {theta0:.6g} violates the upper bound sin(theta0) < sqrt(M/(M+1)) "
            f"(theta0 < {hi:.6g} rad for M = {M}); r2 would be infinite"
        )
    rm = math.sqrt(M)
    s, c = math.sin(theta0), math.cos(theta0)
    r1 = -0.5 * math.log((rm * s - c) / (rm * s + c))
    r2 = -0.5 * math.log((rm * c - s) / (rm * c + s))
    return r1, r2


def squeezing_db(r: float) -> float:
    """Squeezing of parameter ``r`` in dB, ``10 log10 e^{-2|r|}`` (never positive)."""
    return -20.0 * abs(r) / math.log(10.0)


def equal_squeezing_db(M: int) -> float:
    """Per-source squeezing of the symmetric channel, ``10 log10((√M − 1)/(√M + 1))``."""
    _check_M(M)
    rm = math.sqrt(M)
    return 10.0 * math.log10((rm - 1.0) / (rm + 1.0))


@dataclass(frozen=True)
class MqcSpec:
    M: int
    theta0: float = math.pi / 4
    s: float = 0.0
    r1: float = field(init=False)
    r2: float = field(init=False)

    def __post_init__(self):
        _check_M(self.M)
        object.__setattr__(self, "M", int(self.M))
        if not math.isfinite(self.s):
            raise InvalidArgumentError(f"s must be finite, got {self.s}")
        r1, r2 = solve_squeezing(self.M, self.theta0)
        object.__setattr__(self, "r1", r1)
        object.__setattr__(self, "r2", r2)

    @classmethod
    def from_dict(cls, data: dict) -> "MqcSpec":
        unknown = set(data) - {"M", "theta0", "s"}
        if unknown:
            raise InvalidArgumentError(f"unknown MQC spec keys: {sorted(unknown)}")
        return cls(M=data["M"], theta0=data.get("theta0", math.pi / 4), s=data.get("s", 0.0))

    def to_dict(self) -> dict:
        return {"M": self.M, "theta0": self.theta0, "s": self.s, "r1": self.r1, "r2": self.r2}

    @property
    def source_db(self) -> tuple[float, float]:
        return squeezing_db(self.r1), squeezing_db(self.r2)


@dataclass(frozen=True)
class SymmetricMqcSpec:
    M: int
    r: float
    s: float = 0.0

    def __post_init__(self):
        _check_M(self.M, minimum=1)
        object.__setattr__(self, "M", int(self.M))
        if not (math.isfinite(self.r) and self.r >= 0):
            raise InvalidArgumentError(f"EPR squeezing must be finite and >= 0, got {self.r}")
        if not math.isfinite(self.s):
            raise InvalidArgumentError(f"s must be finite, got {self.s}")


def build_mqc(spec: MqcSpec) -> GaussianState:
    """Run the optical recipe; mode 0 is the port, modes 1..M the receivers."""
    n = spec.M + 1
    state = core.vacuum(n)
    # source A is p-squeezed by r1+s, source B x-squeezed by r2-s, ancillas by s
    circuit = core.squeezer(n, 0, spec.r1 + spec.s) @ core.squeezer(n, 1, spec.s - spec.r2)
    for k in range(2, n):
        circuit = core.squeezer(n, k, spec.s) @ circuit
    circuit = core.beam_splitter(n, 0, 1, spec.theta0) @ circuit
    circuit = core.m_splitter(spec.M).embed(n, range(1, n)) @ circuit
    return core.apply_symplectic(state, circuit)


def closed_form_quadratic(spec: MqcSpec) -> np.ndarray:
    """Matrix ``Q`` with ``W ∝ exp(−ξᵀ Q ξ)``, assembled term by term from the Wigner exponent."""
    M, s = spec.M, spec.s
    n = M + 1
    sn, cs = math.sin(spec.theta0), math.cos(spec.theta0)
    Q = np.zeros((2 * n, 2 * n))

    def combo(port_coef: float, recv_coef: float, quad: int) -> np.ndarray:
        v = np.zeros(2 * n)
        v[quad] = port_coef
        v[2 * np.arange(1, n) + quad] = recv_coef / math.sqrt(M)
        return v

    terms = [
        (2 * math.exp(-2 * (s + spec.r1)), combo(sn, cs, 0)),
        (2 * math.exp(2 * (s + spec.r1)), combo(sn, cs, 1)),
        (2 * math.exp(-2 * (s - spec.r2)), combo(cs, -sn, 0)),
        (2 * math.exp(2 * (s - spec.r2)), combo(cs, -sn, 1)),
    ]
    for weight, v in terms:
        Q += weight * np.outer(v, v)
    # ordered pairs (i, j): every unordered pair is counted twice
    for quad, weight in ((0, math.exp(-2 * s) / M), (1, math.exp(2 * s) / M)):
        for i in range(1, n):
            for j in range(1, n):
                if i == j:
                    continue
                d = np.zeros(2 * n)
                d[2 * i + quad] = 1.0
                d[2 * j + quad] = -1.0
                Q += weight * np.outer(d, d)
    return Q


def closed_form_covariance(spec: MqcSpec) -> GaussianState:
    """The channel state read off its Wigner exponent: ``V = Q^{-1}/2``."""
    Q = closed_form_quadratic(spec)
    if np.linalg.matrix_rank(Q) < Q.shape[0]:
        raise NumericalDegeneracyError("quadratic form of the MQC exponent is singular")
    V = 0.5 * core.checked_inv(Q)
    return GaussianState(np.zeros(Q.shape[0]), 0.5 * (V + V.T))


def build_symmetric_mqc(spec: SymmetricMqcSpec) -> GaussianState:
    """Finite-squeezing 2M-mode channel: modes ``0..M-1`` hold the left EPR half, ``M..2M-1`` the right."""
    M = spec.M
    n = 2 * M
    circuit = core.squeezer(n, 0, spec.r + spec.s) @ core.squeezer(n, M, spec.s - spec.r)
    for k in range(n):
        if k not in (0, M):
            circuit = core.squeezer(n, k, spec.s) @ circuit
    circuit = core.beam_splitter(n, 0, M, math.pi / 4) @ circuit
    split = core.m_splitter(M)
    circuit = split.embed(n, range(M)) @ circuit
    circuit = split.embed(n, range(M, n)) @ circuit
    return core.apply_symplectic(core.vacuum(n), circuit)


def wigner_prefactor(spec: MqcSpec) -> float:
    """Normalisation of the closed-form Gaussian; equals ``(2/π)^{M+1}`` for this pure state."""
    V = closed_form_covariance(spec).cov
    return 1.0 / ((2 * math.pi) ** (spec.M + 1) * math.sqrt(np.linalg.det(V)))
