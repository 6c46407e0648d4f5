"""Phase-space linear algebra for Gaussian states.

Conventions used throughout the package:

* quadratures are interleaved, ``(x_1, p_1, ..., x_N, p_N)``;
* ``[x, p] = i/2``, so the vacuum covariance is ``I/4``;
* a passive unitary ``U`` acting on annihilation operators ``a_j -> sum_k U_jk a_k``
  is represented by the real matrix with 2x2 blocks ``[[Re U, -Im U], [Im U, Re U]]``.

States and transforms are immutable; every operation returns a new object.
"""

from __future__ import annotations

import functools
import json
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError, NumericalDegeneracyError

VACUUM_VARIANCE = 0.25
SYMPLECTIC_ATOL = 1e-12
PURITY_ATOL = 1e-9
DEGENERACY_FLOOR = 1e-14
CONDITION_WARN = 1e12

X, P = "X", "P"


@functools.lru_cache(maxsize=64)
def _omega_cached(n: int) -> np.ndarray:
    om = np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))
    om.setflags(write=False)
    return om


def omega(n: int) -> np.ndarray:
    """Symplectic form ``⊕ [[0, 1], [-1, 0]]`` on ``n`` modes."""
    return _omega_cached(n)


def checked_inv(mat: np.ndarray) -> np.ndarray:
    """LU-pivoted inverse that warns on ill-conditioned input."""
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond):
        raise NumericalDegeneracyError("matrix is singular")
    if cond > CONDITION_WARN:
        warnings.warn(f"inverting ill-conditioned matrix (cond={cond:.3g})", RuntimeWarning, stacklevel=2)
    return np.linalg.inv(mat)


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _quad_index(mode: int, quadrature: str) -> int:
    if quadrature not in (X, P):
        raise InvalidArgumentError(f"quadrature must be 'X' or 'P', got {quadrature!r}")
    return 2 * mode + (0 if quadrature == X else 1)


def _mode_indices(modes: Iterable[int]) -> np.ndarray:
    return np.array([2 * m + q for m in modes for q in (0, 1)], dtype=int)


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of an ``num_modes``-mode register."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean).reshape(-1)
        cov = _frozen(self.cov)
        if cov.shape != (mean.size, mean.size) or mean.size % 2:
            raise InvalidArgumentError(f"inconsistent shapes: mean {mean.shape}, cov {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidArgumentError("state moments must be finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def num_modes(self) -> int:
        return self.mean.size // 2

    def asymmetry(self) -> float:
        if self.cov.size == 0:
            return 0.0
        return float(np.max(np.abs(self.cov - self.cov.T)))

    def is_physical(self, atol: float = PURITY_ATOL) -> bool:
        return bool(np.all(symplectic_eigenvalues(self) >= VACUUM_VARIANCE - atol))

    def is_pure(self, atol: float = PURITY_ATOL) -> bool:
        return bool(np.all(np.abs(symplectic_eigenvalues(self) - VACUUM_VARIANCE) <= atol))

    def to_dict(self) -> dict:
        return {"modes": self.num_modes, "mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianState":
        state = cls(np.asarray(data["mean"], dtype=float), np.asarray(data["cov"], dtype=float))
        if state.num_modes != int(data["modes"]):
            raise InvalidArgumentError(f"'modes' is {data['modes']} but moments describe {state.num_modes} modes")
        return state

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "GaussianState":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SymplecticTransform:
    """Real ``2N x 2N`` matrix acting on quadrature operators, ``r -> S r``."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2:
            raise InvalidArgumentError(f"symplectic matrix must be square of even size, got {mat.shape}")
        object.__setattr__(self, "matrix", mat)

    @property
    def num_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def deviation(self) -> float:
        """``max |S Ω Sᵀ − Ω|``."""
        om = omega(self.num_modes)
        return float(np.max(np.abs(self.matrix @ om @ self.matrix.T - om)))

    def is_symplectic(self, atol: float = SYMPLECTIC_ATOL) -> bool:
        return self.deviation() <= atol

    def __matmul__(self, other: "SymplecticTransform") -> "SymplecticTransform":
        if self.matrix.shape != other.matrix.shape:
            raise InvalidArgumentError("cannot compose transforms of different sizes")
        return SymplecticTransform(self.matrix @ other.matrix)

    def inverse(self) -> "SymplecticTransform":
        om = omega(self.num_modes)
        return SymplecticTransform(-om @ self.matrix.T @ om)

    def embed(self, n: int, modes: Sequence[int]) -> "SymplecticTransform":
        """Act on ``modes`` of an ``n``-mode register, identity elsewhere."""
        modes = list(modes)
        if len(modes) != self.num_modes or len(set(modes)) != len(modes):
            raise InvalidArgumentError(f"need {self.num_modes} distinct modes, got {modes}")
        for m in modes:
            _check_mode(n, m)
        idx = _mode_indices(modes)
        full = np.eye(2 * n)
        full[np.ix_(idx, idx)] = self.matrix
        return SymplecticTransform(full)


@dataclass(frozen=True)
class HomodyneOutcome:
    measured_quadrature: str
    mode: int
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvalidArgumentError("homodyne outcome must be finite")


def _check_mode(n: int, k: int):
    if not (0 <= k < n):
        raise InvalidArgumentError(f"mode index {k} out of range for {n} modes")


# --- states -----------------------------------------------------------------


def vacuum(n: int) -> GaussianState:
    if n < 1:
        raise InvalidArgumentError(f"vacuum needs at least one mode, got {n}")
    return GaussianState(np.zeros(2 * n), VACUUM_VARIANCE * np.eye(2 * n))


def coherent(x0: float, p0: float) -> GaussianState:
    return GaussianState(np.array([x0, p0]), VACUUM_VARIANCE * np.eye(2))


def squeezed_vacuum(r: float, squeeze_p: bool = True) -> GaussianState:
    """Single-mode squeezed vacuum; ``squeeze_p`` selects the quadrature reduced for ``r > 0``."""
    if not math.isfinite(r):
        raise InvalidArgumentError(f"squeezing parameter must be finite, got {r}")
    big, small = math.exp(2 * r), math.exp(-2 * r)
    diag = (big, small) if squeeze_p else (small, big)
    return GaussianState(np.zeros(2), VACUUM_VARIANCE * np.diag(diag))


def squeezed_coherent(x0: float, p0: float, s: float) -> GaussianState:
    """Displaced squeezed state with x-variance ``e^{2s}/4`` and p-variance ``e^{-2s}/4``."""
    sq = squeezed_vacuum(s, squeeze_p=True)
    return GaussianState(np.array([x0, p0]), sq.cov)


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    na, nb = 2 * a.num_modes, 2 * b.num_modes
    cov = np.zeros((na + nb, na + nb))
    cov[:na, :na] = a.cov
    cov[na:, na:] = b.cov
    return GaussianState(np.concatenate([a.mean, b.mean]), cov)


def apply_symplectic(state: GaussianState, S: SymplecticTransform) -> GaussianState:
    if S.num_modes != state.num_modes:
        raise InvalidArgumentError(f"transform acts on {S.num_modes} modes, state has {state.num_modes}")
    s = S.matrix
    return GaussianState(s @ state.mean, s @ state.cov @ s.T)


def displace(state: GaussianState, mode: int, dx: float, dp: float) -> GaussianState:
    _check_mode(state.num_modes, mode)
    mean = state.mean.copy()
    mean[2 * mode] += dx
    mean[2 * mode + 1] += dp
    return GaussianState(mean, state.cov)


def partial_trace(state: GaussianState, keep: Iterable[int]) -> GaussianState:
    """Reduced state on ``keep`` (in the order given)."""
    keep = list(keep)
    if not keep:
        raise InvalidArgumentError("partial_trace needs at least one mode to keep")
    for m in keep:
        _check_mode(state.num_modes, m)
    idx = _mode_indices(keep)
    return GaussianState(state.mean[idx], state.cov[np.ix_(idx, idx)])


def permute_modes(state: GaussianState, order: Sequence[int]) -> GaussianState:
    if sorted(order) != list(range(state.num_modes)):
        raise InvalidArgumentError(f"{order} is not a permutation of {state.num_modes} modes")
    return partial_trace(state, order)


# --- transforms -------------------------------------------------------------


def passive_symplectic(U: np.ndarray) -> SymplecticTransform:
    """Real symplectic image of a complex unitary acting on annihilation operators."""
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    S = np.empty((2 * n, 2 * n))
    S[0::2, 0::2] = U.real
    S[0::2, 1::2] = -U.imag
    S[1::2, 0::2] = U.imag
    S[1::2, 1::2] = U.real
    return SymplecticTransform(S)


def beam_splitter_unitary(theta: float, phi: float = 0.0) -> np.ndarray:
    """2x2 mode matrix ``[[e^{iφ} sinθ, e^{iφ} cosθ], [cosθ, -sinθ]]``."""
    s, c = math.sin(theta), math.cos(theta)
    ph = complex(math.cos(phi), math.sin(phi))
    return np.array([[ph * s, ph * c], [c, -s]], dtype=complex)


def embed_unitary(U: np.ndarray, n: int, modes: Sequence[int]) -> np.ndarray:
    full = np.eye(n, dtype=complex)
    full[np.ix_(modes, modes)] = U
    return full


def beam_splitter(n: int, k: int, l: int, theta: float, phi: float = 0.0) -> SymplecticTransform:
    """Beam splitter between modes ``k`` and ``l``.

    With ``phi = 0`` this is the phase-free splitter
    ``c_k -> sinθ c_k + cosθ c_l``, ``c_l -> cosθ c_k - sinθ c_l``.
    """
    _check_mode(n, k)
    _check_mode(n, l)
    if k == l:
        raise InvalidArgumentError("beam splitter needs two distinct modes")
    return passive_symplectic(embed_unitary(beam_splitter_unitary(theta, phi), n, [k, l]))


def squeezer(n: int, k: int, r: float) -> SymplecticTransform:
    """``x_k -> e^{r} x_k``, ``p_k -> e^{-r} p_k``: squeezes p for ``r > 0``."""
    _check_mode(n, k)
    diag = np.ones(2 * n)
    diag[2 * k] = math.exp(r)
    diag[2 * k + 1] = math.exp(-r)
    return SymplecticTransform(np.diag(diag))


def phase_shift(n: int, k: int, beta: float) -> SymplecticTransform:
    """Rotation ``a_k -> e^{iβ} a_k``."""
    _check_mode(n, k)
    c, s = math.cos(beta), math.sin(beta)
    S = np.eye(2 * n)
    S[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = [[c, -s], [s, c]]
    return SymplecticTransform(S)


def m_splitter_unitary(M: int) -> np.ndarray:
    """Real orthogonal mode matrix of the M-splitter cascade.

    ``B_{M-1,M}(asin 1/√2) ··· B_{2,3}(asin 1/√(M-1)) B_{1,2}(asin 1/√M)``;
    column 0 comes out as ``(1, ..., 1)/√M``.
    """
    if M < 1:
        raise InvalidArgumentError(f"M-splitter needs M >= 1, got {M}")
    U = np.eye(M)
    for k in range(M - 1):
        theta = math.asin(1.0 / math.sqrt(M - k))
        U = embed_unitary(beam_splitter_unitary(theta), M, [k, k + 1]).real @ U
    return U


def m_splitter(M: int) -> SymplecticTransform:
    return passive_symplectic(m_splitter_unitary(M))


def reck_pairs(n: int) -> list[tuple[int, int]]:
    """Beam-splitter positions ``(k, l)`` in the left-to-right order of the Reck product.

    The product is ``B_{n-2,n-1} B_{n-3,n-1} ··· B_{0,n-1} · B_{n-3,n-2} ··· B_{0,1}`` (zero-based).
    """
    return [(k, l) for l in range(n - 1, 0, -1) for k in range(l - 1, -1, -1)]


def reck_unitary(n: int, thetas: Sequence[float], phis: Sequence[float], betas: Sequence[float]) -> np.ndarray:
    """``(B_1 B_2 ··· B_K D)^{-1}`` with ``D = diag(e^{iβ})``."""
    pairs = reck_pairs(n)
    if len(thetas) != len(pairs) or len(phis) != len(pairs):
        raise InvalidArgumentError(f"{n} modes need {len(pairs)} (theta, phi) pairs, got {len(thetas)}/{len(phis)}")
    if len(betas) != n:
        raise InvalidArgumentError(f"{n} modes need {n} phases, got {len(betas)}")
    prod = np.diag(np.exp(1j * np.asarray(betas, dtype=float)))
    for (k, l), th, ph in reversed(list(zip(pairs, thetas, phis))):
        prod = embed_unitary(beam_splitter_unitary(th, ph), n, [k, l]) @ prod
    return prod.conj().T


def reck_interferometer(n: int, thetas, phis, betas) -> SymplecticTransform:
    return passive_symplectic(reck_unitary(n, thetas, phis, betas))


def reck_decompose(U: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`reck_unitary`: find ``(thetas, phis, betas)`` reproducing ``U``.

    Works on ``W = U^{-1}`` and strips the beam splitters from the left one
    column at a time, nulling the off-diagonal entries of the last column.
    """
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    if U.shape != (n, n) or np.max(np.abs(U.conj().T @ U - np.eye(n))) > 1e-9:
        raise InvalidArgumentError("reck_decompose needs a square unitary matrix")
    W = U.conj().T.copy()
    params = {}
    for l in range(n - 1, 0, -1):
        for k in range(l - 1, -1, -1):
            a, b = W[k, l], W[l, l]
            theta = math.atan2(abs(b), abs(a))
            if abs(a) == 0.0 and abs(b) == 0.0:
                phi = 0.0
            else:
                phi = float(np.angle(a) - np.angle(b) - math.pi)
            params[(k, l)] = (theta, phi)
            Binv = embed_unitary(beam_splitter_unitary(theta, phi), n, [k, l]).conj().T
            W = Binv @ W
    betas = np.angle(np.diag(W))
    pairs = reck_pairs(n)
    thetas = np.array([params[p][0] for p in pairs])
    phis = np.array([params[p][1] for p in pairs])
    return thetas, phis, betas


# --- measurement and diagnostics ---------------------------------------------


@dataclass(frozen=True)
class QuadratureConditioning:
    """Everything needed to condition a state on one measured quadrature.

    The post-measurement mean is ``rest_mean + gain * (outcome - mean)`` and the
    covariance ``rest_cov`` does not depend on the outcome.
    """

    mean: float
    variance: float
    gain: np.ndarray
    rest_mean: np.ndarray
    rest_cov: np.ndarray

    def state_for(self, outcome: float) -> GaussianState:
        return GaussianState(self.rest_mean + self.gain * (outcome - self.mean), self.rest_cov)


def condition_quadrature(state: GaussianState, mode: int, quadrature: str) -> QuadratureConditioning:
    _check_mode(state.num_modes, mode)
    i = _quad_index(mode, quadrature)
    v = state.cov[i, i]
    if v < DEGENERACY_FLOOR:
        raise NumericalDegeneracyError(f"measured variance {v:.3g} is degenerate")
    keep = _mode_indices(m for m in range(state.num_modes) if m != mode)
    cross = state.cov[keep, i]
    return QuadratureConditioning(
        mean=float(state.mean[i]),
        variance=float(v),
        gain=cross / v,
        rest_mean=state.mean[keep],
        rest_cov=state.cov[np.ix_(keep, keep)] - np.outer(cross, cross) / v,
    )


def homodyne(
    state: GaussianState,
    mode: int,
    quadrature: str,
    rng: np.random.Generator | None = None,
    outcome: float | None = None,
) -> tuple[HomodyneOutcome, GaussianState]:
    """Measure one quadrature of ``mode`` and return the outcome and the state of the other modes.

    Either a fixed ``outcome`` or an ``rng`` to sample it from the marginal must be given.
    """
    cond = condition_quadrature(state, mode, quadrature)
    if outcome is None:
        if rng is None:
            raise InvalidArgumentError("homodyne needs either an rng or a fixed outcome")
        outcome = float(rng.normal(cond.mean, math.sqrt(cond.variance)))
    result = HomodyneOutcome(quadrature, mode, float(outcome))
    return result, cond.state_for(result.value)


def symplectic_eigenvalues(state_or_cov) -> np.ndarray:
    """Sorted symplectic spectrum (length N) of a covariance matrix."""
    cov = state_or_cov.cov if isinstance(state_or_cov, GaussianState) else np.asarray(state_or_cov, dtype=float)
    if cov.size == 0:
        return np.zeros(0)
    if np.max(np.abs(cov - cov.T)) > 1e-12 * max(1.0, np.max(np.abs(cov))):
        raise InvalidArgumentError("covariance matrix is not symmetric")
    n = cov.shape[0] // 2
    ev = np.sort(np.abs(np.linalg.eigvals(omega(n) @ cov)))
    return ev[0::2]


def gaussian_fidelity(pure_input: GaussianState, output: GaussianState) -> float:
    """Overlap ``π ∫ W_in W_out`` of two single-mode Gaussians; the fidelity when the input is pure."""
    if pure_input.num_modes != 1 or output.num_modes != 1:
        raise InvalidArgumentError("gaussian_fidelity compares single-mode states")
    if not pure_input.is_pure():
        raise InvalidArgumentError("first argument must be a pure state")
    total = pure_input.cov + output.cov
    delta = output.mean - pure_input.mean
    det = float(np.linalg.det(total))
    quad = float(delta @ np.linalg.solve(total, delta))
    return math.exp(-0.5 * quad) / (2.0 * math.sqrt(det))


def wigner(state: GaussianState, points: np.ndarray) -> np.ndarray:
    """Evaluate the Wigner function at ``points`` of shape ``(..., 2N)``."""
    n2 = 2 * state.num_modes
    inv = checked_inv(state.cov)
    d = np.asarray(points, dtype=float) - state.mean
    expo = -0.5 * np.einsum("...i,ij,...j->...", d, inv, d)
    norm = (2 * math.pi) ** (n2 / 2) * math.sqrt(np.linalg.det(state.cov))
    return np.exp(expo) / norm
