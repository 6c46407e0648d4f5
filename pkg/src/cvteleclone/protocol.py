"""Telecloning protocol: Bell detection at the port, feedforward, clone extraction.

Two independent routes to the clone channel:

* ``derive_ensemble_channel`` propagates quadrature operators through the
  protocol (Heisenberg picture).  Measurement plus displacement by a multiple
  of the outcome is linear, so the outcome-averaged map is exactly affine.
* ``run_teleclone_mc`` conditions the joint Gaussian state on sampled homodyne
  outcomes (Schur complements), displaces, draws clone samples and estimates
  moments and fidelity from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__, core
from .core import GaussianState, SymplecticTransform
from .errors import DegeneratePortError, InvalidArgumentError

GAIN_FLOOR = 1e-12
MC_CHUNK = 4096
JACKKNIFE_BLOCKS = 100


def bell_mixer() -> SymplecticTransform:
    """Phase-free 50:50 mixer on (input, port) with outputs (u, v).

    ``x_u = (x_in − x_port)/√2`` and ``p_v = (p_in + p_port)/√2``; the port is
    recovered as ``(α_v − α_u)/√2``.
    """
    h = 1.0 / math.sqrt(2.0)
    return core.passive_symplectic(np.array([[h, -h], [h, h]]))


@dataclass(frozen=True)
class GaussianChannel:
    """Single-mode affine channel ``mean -> gain·mean + offset``, ``cov -> gain·cov·gainᵀ + noise``."""

    gain: np.ndarray
    noise: np.ndarray
    clone_count: int = 1
    offset: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        for name in ("gain", "noise", "offset"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.gain.shape != (2, 2) or self.noise.shape != (2, 2):
            raise InvalidArgumentError("single-mode channel needs 2x2 gain and noise")

    @property
    def excess_noise(self) -> tuple[float, float]:
        return float(self.noise[0, 0]), float(self.noise[1, 1])

    def is_unit_gain(self, atol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.gain - np.eye(2))) <= atol)

    def apply(self, state: GaussianState) -> GaussianState:
        g = self.gain
        return GaussianState(g @ state.mean + self.offset, g @ state.cov @ g.T + self.noise)

    def to_dict(self) -> dict:
        return {
            "gain": self.gain.tolist(),
            "noise": self.noise.tolist(),
            "offset": self.offset.tolist(),
            "clone_count": self.clone_count,
        }


def classical_channel() -> GaussianChannel:
    """Measure-and-prepare benchmark: unit gain plus two vacuum units of noise."""
    return GaussianChannel(np.eye(2), 0.5 * np.eye(2))


@dataclass(frozen=True)
class InputSpec:
    kind: str = "coherent"
    x0: float = 0.0
    p0: float = 0.0
    s_in: float = 0.0

    def __post_init__(self):
        if self.kind not in ("coherent", "squeezed"):
            raise InvalidArgumentError(f"input kind must be 'coherent' or 'squeezed', got {self.kind!r}")
        if not all(math.isfinite(v) for v in (self.x0, self.p0, self.s_in)):
            raise InvalidArgumentError("input parameters must be finite")
        if self.kind == "coherent" and self.s_in != 0.0:
            raise InvalidArgumentError("coherent inputs have s_in = 0; use kind='squeezed'")

    def state(self) -> GaussianState:
        return core.squeezed_coherent(self.x0, self.p0, self.s_in)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "x0": self.x0, "p0": self.p0, "s_in": self.s_in}


@dataclass(frozen=True)
class EnsembleChannel:
    """Outcome-averaged map from the input mode to all clones."""

    clones: tuple[GaussianChannel, ...]
    joint_gain: np.ndarray
    joint_offset: np.ndarray
    joint_noise: np.ndarray
    feedforward_gains: tuple[float, float]
    receivers: tuple[int, ...]

    @property
    def clone_count(self) -> int:
        return len(self.clones)

    def output_state(self, input_state: GaussianState) -> GaussianState:
        """Joint M-mode ensemble output for a given input."""
        g = self.joint_gain
        return GaussianState(g @ input_state.mean + self.joint_offset, g @ input_state.cov @ g.T + self.joint_noise)


def _default_receivers(num_modes: int, port: int) -> tuple[int, ...]:
    return tuple(m for m in range(num_modes) if m != port)


def _measured_rows(mqc_state: GaussianState, port: int, pre_bell: SymplecticTransform | None):
    """Rows of the joint (input ⊗ MQC) propagator giving ``x_u`` and ``p_v``."""
    n = mqc_state.num_modes + 1
    core._check_mode(mqc_state.num_modes, port)
    pre = bell_mixer() if pre_bell is None else pre_bell
    if pre.num_modes != 2:
        raise InvalidArgumentError("pre-Bell transform must act on two modes")
    if not pre.is_symplectic(1e-10):
        raise InvalidArgumentError(f"pre-Bell transform is not symplectic (deviation {pre.deviation():.3g})")
    S = pre.embed(n, [0, port + 1]).matrix
    return S[0], S[2 * (port + 1) + 1]


def _unit_gains(row_x: np.ndarray, row_p: np.ndarray) -> tuple[float, float]:
    a, d = row_x[0], row_p[1]
    if abs(a) < GAIN_FLOOR or abs(d) < GAIN_FLOOR:
        raise DegeneratePortError(
            f"measured quadratures do not see the input (coefficients {a:.3g}, {d:.3g}); unit gain is unreachable"
        )
    return 1.0 / a, 1.0 / d


def solve_unit_gain(mqc_state: GaussianState, port: int, pre_bell: SymplecticTransform | None = None) -> tuple[float, float]:
    """Feedforward gains ``(g_x, g_p)`` that make the clone gain ``x_in -> x_in``, ``p_in -> p_in``."""
    return _unit_gains(*_measured_rows(mqc_state, port, pre_bell))


def derive_ensemble_channel(
    mqc_state: GaussianState,
    port: int = 0,
    pre_bell: SymplecticTransform | None = None,
    gains: Sequence[float] | None = None,
    receivers: Sequence[int] | None = None,
) -> EnsembleChannel:
    """Clone channel from Heisenberg propagation of the protocol.

    Each clone quadrature is ``r_j + g·m`` where ``m`` is the measured
    quadrature (``x_u`` for x, ``p_v`` for p).  Both are linear in the input
    quadratures and in the MQC quadratures, so the clone is a fixed linear
    combination of the two; the input part is the gain, the MQC part sets the
    offset and noise.  ``gains`` defaults to the unit-gain solution.
    """
    row_x, row_p = _measured_rows(mqc_state, port, pre_bell)
    if gains is None:
        gains = _unit_gains(row_x, row_p)
    gx, gp = (float(g) for g in gains)
    n_mqc = mqc_state.num_modes
    receivers = tuple(_default_receivers(n_mqc, port) if receivers is None else receivers)
    if port in receivers or not receivers:
        raise InvalidArgumentError("receivers must be a non-empty set of modes other than the port")
    for r in receivers:
        core._check_mode(n_mqc, r)

    n_total = 2 * (n_mqc + 1)
    T = np.zeros((2 * len(receivers), n_total))
    for j, r in enumerate(receivers):
        T[2 * j, 2 * (r + 1)] = 1.0
        T[2 * j + 1, 2 * (r + 1) + 1] = 1.0
        T[2 * j] += gx * row_x
        T[2 * j + 1] += gp * row_p
    T_in, T_mqc = T[:, :2], T[:, 2:]
    offset = T_mqc @ mqc_state.mean
    noise = T_mqc @ mqc_state.cov @ T_mqc.T
    noise = 0.5 * (noise + noise.T)

    clones = tuple(
        GaussianChannel(
            gain=T_in[2 * j : 2 * j + 2],
            noise=noise[2 * j : 2 * j + 2, 2 * j : 2 * j + 2],
            clone_count=len(receivers),
            offset=offset[2 * j : 2 * j + 2],
        )
        for j in range(len(receivers))
    )
    return EnsembleChannel(clones, T_in, offset, noise, (gx, gp), receivers)


def clone_fidelity(lambda_x: float, lambda_p: float, s_in: float = 0.0) -> float:
    """Fidelity of a unit-gain additive-noise clone of a squeezed input (x-variance ``e^{2s}/4``)."""
    if lambda_x < 0 or lambda_p < 0:
        raise InvalidArgumentError("excess noise must be non-negative")
    s = s_in
    return 2.0 / math.sqrt(
        (4 * lambda_x * math.exp(-4 * s) + 2 * math.exp(-2 * s)) * (4 * lambda_p * math.exp(4 * s) + 2 * math.exp(2 * s))
    )


def optimal_fidelity(M: int) -> float:
    """Optimal symmetric 1 -> M coherent-state cloning fidelity, ``M/(2M − 1)``."""
    if M < 1:
        raise InvalidArgumentError(f"M must be >= 1, got {M}")
    return M / (2 * M - 1)


def mqc_excess_noise(M: int) -> float:
    """Symmetric excess noise ``(M − 1)/(2M)`` of the optimal channel."""
    return (M - 1) / (2 * M)


def verify_output_symmetry(joint_output_cov: np.ndarray, atol: float = 1e-10) -> tuple[bool, float]:
    """Check that swapping any two clones leaves the joint covariance unchanged."""
    cov = np.asarray(joint_output_cov, dtype=float)
    M = cov.shape[0] // 2
    worst = 0.0
    for i in range(M):
        for j in range(i + 1, M):
            order = list(range(M))
            order[i], order[j] = j, i
            idx = np.array([2 * m + q for m in order for q in (0, 1)])
            worst = max(worst, float(np.max(np.abs(cov[np.ix_(idx, idx)] - cov))))
    return worst <= atol, worst


@dataclass
class TelecloneReport:
    M: int
    channel: GaussianChannel
    fidelity_per_clone: float
    optimal_fidelity: float
    excess_noise: tuple[float, float]
    feedforward_gain: tuple[float, float]
    method: str
    input: InputSpec
    clone_fidelities: list[float]
    trials: int | None = None
    seed: int | None = None
    fidelity_stderr: float | None = None
    excess_noise_stderr: tuple[float, float] | None = None
    clone_mean: tuple[float, float] | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "M": self.M,
            "method": self.method,
            "fidelity_per_clone": self.fidelity_per_clone,
            "optimal_fidelity": self.optimal_fidelity,
            "excess_noise": list(self.excess_noise),
            "feedforward_gain": list(self.feedforward_gain),
            "clone_fidelities": list(self.clone_fidelities),
            "channel": self.channel.to_dict(),
            "input": self.input.to_dict(),
            "version": __version__,
        }
        if self.method == "monte_carlo":
            out.update(
                trials=self.trials,
                seed=self.seed,
                fidelity_stderr=self.fidelity_stderr,
                excess_noise_stderr=list(self.excess_noise_stderr),
                clone_mean=list(self.clone_mean),
            )
        out.update(self.extra)
        return out


def teleclone_analytic(
    mqc_state: GaussianState,
    input_spec: InputSpec,
    port: int = 0,
    pre_bell: SymplecticTransform | None = None,
    gains: Sequence[float] | None = None,
    receivers: Sequence[int] | None = None,
) -> TelecloneReport:
    ens = derive_ensemble_channel(mqc_state, port, pre_bell, gains, receivers)
    psi = input_spec.state()
    fids = [core.gaussian_fidelity(psi, ch.apply(psi)) for ch in ens.clones]
    ch0 = ens.clones[0]
    return TelecloneReport(
        M=ens.clone_count,
        channel=ch0,
        fidelity_per_clone=float(np.mean(fids)),
        optimal_fidelity=optimal_fidelity(ens.clone_count),
        excess_noise=ch0.excess_noise,
        feedforward_gain=ens.feedforward_gains,
        method="analytic",
        input=input_spec,
        clone_fidelities=fids,
    )


def _jackknife_se(values: np.ndarray, blocks: int = JACKKNIFE_BLOCKS) -> float:
    """Delete-one-block jackknife standard error of the mean of ``values``."""
    n = values.shape[0]
    blocks = min(blocks, n)
    if blocks < 2:
        return float("nan")
    sums = np.array([b.sum() for b in np.array_split(values, blocks)])
    counts = np.array([b.shape[0] for b in np.array_split(values, blocks)])
    loo = (sums.sum() - sums) / (n - counts)
    return float(math.sqrt((blocks - 1) / blocks * np.sum((loo - loo.mean()) ** 2)))


def _jackknife_var_se(samples: np.ndarray, blocks: int = JACKKNIFE_BLOCKS) -> float:
    n = samples.shape[0]
    blocks = min(blocks, n)
    if blocks < 2:
        return float("nan")
    parts = np.array_split(np.arange(n), blocks)
    loo = np.array([np.var(np.delete(samples, idx), ddof=1) for idx in parts])
    return float(math.sqrt((blocks - 1) / blocks * np.sum((loo - loo.mean()) ** 2)))


def sample_clones(
    mqc_state: GaussianState,
    input_state: GaussianState,
    trials: int,
    seed: int,
    port: int = 0,
    pre_bell: SymplecticTransform | None = None,
    gains: Sequence[float] | None = None,
    receivers: Sequence[int] | None = None,
) -> np.ndarray:
    """Simulate ``trials`` protocol runs; returns clone quadrature samples of shape ``(trials, 2M)``.

    Trial ``t`` draws from the substream of chunk ``t // MC_CHUNK`` spawned from
    ``seed``, so results do not depend on how the chunks are scheduled.
    """
    if trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    if gains is None:
        gains = solve_unit_gain(mqc_state, port, pre_bell)
    gx, gp = gains
    n_mqc = mqc_state.num_modes
    receivers = list(_default_receivers(n_mqc, port) if receivers is None else receivers)
    pre = bell_mixer() if pre_bell is None else pre_bell

    joint = core.tensor(input_state, mqc_state)
    joint = core.apply_symplectic(joint, pre.embed(n_mqc + 1, [0, port + 1]))
    # x of u (joint mode 0) first; afterwards v sits at joint index port + 1 shifted down by one
    first = core.condition_quadrature(joint, 0, core.X)
    after_first = first.state_for(first.mean)
    second = core.condition_quadrature(after_first, port, core.P)
    rest_modes = [m for m in range(n_mqc + 1) if m not in (0, port + 1)]
    keep = [rest_modes.index(r + 1) for r in receivers]
    idx = np.array([2 * k + q for k in keep for q in (0, 1)])
    cond_cov = second.rest_cov[np.ix_(idx, idx)]
    # the second conditioning's marginal mean depends linearly on the first outcome
    second_mean_slope = first.gain[2 * port + 1]
    w, vecs = np.linalg.eigh(0.5 * (cond_cov + cond_cov.T))
    root = vecs * np.sqrt(np.clip(w, 0.0, None))

    ff = np.zeros(2 * len(receivers))
    ff_x, ff_p = ff.copy(), ff.copy()
    ff_x[0::2] = gx
    ff_p[1::2] = gp

    children = np.random.SeedSequence(seed).spawn((trials + MC_CHUNK - 1) // MC_CHUNK)
    out = np.empty((trials, 2 * len(receivers)))
    for c, child in enumerate(children):
        lo = c * MC_CHUNK
        hi = min(trials, lo + MC_CHUNK)
        rng = np.random.default_rng(child)
        k = hi - lo
        z = rng.standard_normal((k, 2 + 2 * len(receivers)))
        o1 = first.mean + math.sqrt(first.variance) * z[:, 0]
        mu2 = second.mean + second_mean_slope * (o1 - first.mean)
        o2 = mu2 + math.sqrt(second.variance) * z[:, 1]
        # conditional mean of all remaining modes, then restricted to receivers
        m1 = after_first.mean[None, :] + np.outer(o1 - first.mean, first.gain)
        m1_rest = np.delete(m1, [2 * port, 2 * port + 1], axis=1)
        m2 = m1_rest + np.outer(o2 - mu2, second.gain)
        cond_mean = m2[:, idx]
        out[lo:hi] = cond_mean + np.outer(o1, ff_x) + np.outer(o2, ff_p) + z[:, 2:] @ root.T
    return out


def run_teleclone_mc(
    mqc_state: GaussianState,
    input_spec: InputSpec,
    trials: int = 100_000,
    seed: int = 0,
    port: int = 0,
    pre_bell: SymplecticTransform | None = None,
    gains: Sequence[float] | None = None,
    receivers: Sequence[int] | None = None,
) -> TelecloneReport:
    """Monte Carlo telecloning with sample-moment and sample-fidelity estimates.

    The fidelity estimator is the clone-sample average of ``π W_in``, which is
    unbiased because the clone Wigner function is a Gaussian density.
    """
    if gains is None:
        gains = solve_unit_gain(mqc_state, port, pre_bell)
    psi = input_spec.state()
    samples = sample_clones(mqc_state, psi, trials, seed, port, pre_bell, gains, receivers)
    M = samples.shape[1] // 2

    w_in = math.pi * core.wigner(psi, samples.reshape(trials, M, 2))
    per_trial = w_in.mean(axis=1)
    clone_fids = [float(v) for v in w_in.mean(axis=0)]

    xs, ps = samples[:, 0::2], samples[:, 1::2]
    if trials > 1:
        noises = [np.cov(samples[:, 2 * j : 2 * j + 2], rowvar=False, ddof=1) - psi.cov for j in range(M)]
        noise = np.mean(noises, axis=0)
        noise_se = (_jackknife_var_se(xs[:, 0]), _jackknife_var_se(ps[:, 0]))
    else:
        noise = np.full((2, 2), np.nan)
        noise_se = (float("nan"), float("nan"))
    channel = GaussianChannel(np.eye(2), noise, M, offset=np.zeros(2))
    return TelecloneReport(
        M=M,
        channel=channel,
        fidelity_per_clone=float(per_trial.mean()),
        optimal_fidelity=optimal_fidelity(M),
        excess_noise=(float(noise[0, 0]), float(noise[1, 1])),
        feedforward_gain=(float(gains[0]), float(gains[1])),
        method="monte_carlo",
        input=input_spec,
        clone_fidelities=clone_fids,
        trials=trials,
        seed=seed,
        fidelity_stderr=_jackknife_se(per_trial),
        excess_noise_stderr=noise_se,
        clone_mean=(float(xs.mean()), float(ps.mean())),
    )
