"""Genetic search over general Gaussian telecloning circuits.

A candidate circuit is M+1 single-mode squeezers on vacua, a Reck-decomposed
(M+1)-mode interferometer, and a two-mode unitary applied to (input, port)
ahead of the fixed Bell mixer.  The search minimises total squeezing (dB)
subject to the clone channel being unit-gain with symmetric excess noise
``(M-1)/2M``, using an additive penalty on the constraint residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from . import core, mqc, protocol
from .core import GaussianState, SymplecticTransform
from .errors import DegeneratePortError, InvalidArgumentError, NumericalDegeneracyError

XI_BOUND = 3.0
TWO_PI = 2.0 * math.pi
DEGENERATE_RESIDUAL = 10.0
VACUUM_THRESHOLD_DB = 0.1


def genome_length(M: int) -> int:
    return M * M + 3 * M + 6


@dataclass(frozen=True)
class GenomeLayout:
    """Slices of the flat parameter vector: xi | thetas | phis | betas | u2."""

    M: int

    @property
    def n(self) -> int:
        return self.M + 1

    @property
    def n_bs(self) -> int:
        return self.M * (self.M + 1) // 2

    @property
    def xi(self) -> slice:
        return slice(0, self.n)

    @property
    def thetas(self) -> slice:
        return slice(self.n, self.n + self.n_bs)

    @property
    def phis(self) -> slice:
        return slice(self.n + self.n_bs, self.n + 2 * self.n_bs)

    @property
    def betas(self) -> slice:
        start = self.n + 2 * self.n_bs
        return slice(start, start + self.n)

    @property
    def u2(self) -> slice:
        start = 2 * self.n + 2 * self.n_bs
        return slice(start, start + 4)

    @property
    def size(self) -> int:
        return genome_length(self.M)

    def angle_mask(self) -> np.ndarray:
        mask = np.ones(self.size, dtype=bool)
        mask[self.xi] = False
        return mask


def normalize_genome(genome: np.ndarray, M: int) -> np.ndarray:
    """Clip squeezing to ``|xi| <= 3`` and reduce every angle to ``[0, 2π)``."""
    layout = GenomeLayout(M)
    g = np.array(genome, dtype=float)
    if g.shape != (layout.size,):
        raise InvalidArgumentError(f"genome for M = {M} needs {layout.size} parameters, got {g.shape}")
    g[layout.xi] = np.clip(g[layout.xi], -XI_BOUND, XI_BOUND)
    mask = layout.angle_mask()
    g[mask] = np.mod(g[mask], TWO_PI)
    return g


@dataclass(frozen=True)
class CircuitGenome:
    M: int
    values: np.ndarray

    def __post_init__(self):
        vals = normalize_genome(self.values, self.M)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def layout(self) -> GenomeLayout:
        return GenomeLayout(self.M)

    @property
    def xi(self) -> np.ndarray:
        return self.values[self.layout.xi]

    def to_dict(self) -> dict:
        lay = self.layout
        v = self.values
        return {
            "M": self.M,
            "xi": v[lay.xi].tolist(),
            "thetas": v[lay.thetas].tolist(),
            "phis": v[lay.phis].tolist(),
            "betas": v[lay.betas].tolist(),
            "u2": v[lay.u2].tolist(),
        }


def u2_unitary(params: Sequence[float]) -> np.ndarray:
    """General U(2): ``e^{iδ} R(θ1) diag(e^{iα}, e^{-iα}) R(θ2)`` with real rotations R; zero maps to identity."""
    th1, th2, alpha, delta = params

    def rot(t):
        c, s = math.cos(t), math.sin(t)
        return np.array([[c, -s], [s, c]])

    ph = np.diag([np.exp(1j * alpha), np.exp(-1j * alpha)])
    return np.exp(1j * delta) * (rot(th1) @ ph @ rot(th2))


def pre_bell_transform(u2: Sequence[float]) -> SymplecticTransform:
    """Bell mixer preceded by the free two-mode unitary on (input, port)."""
    bell = np.array([[1.0, -1.0], [1.0, 1.0]]) / math.sqrt(2.0)
    return core.passive_symplectic(bell @ u2_unitary(u2))


def genome_to_scheme(genome, M: int) -> tuple[GaussianState, SymplecticTransform]:
    """Channel state (port = mode 0) and pre-Bell transform encoded by ``genome``."""
    g = genome.values if isinstance(genome, CircuitGenome) else normalize_genome(genome, M)
    lay = GenomeLayout(M)
    n = lay.n
    xi = g[lay.xi]
    U = core.reck_unitary(n, g[lay.thetas], g[lay.phis], g[lay.betas])
    S = core.passive_symplectic(U).matrix
    diag = np.empty(2 * n)
    diag[0::2] = np.exp(2 * xi)
    diag[1::2] = np.exp(-2 * xi)
    cov = S @ np.diag(core.VACUUM_VARIANCE * diag) @ S.T
    state = GaussianState(np.zeros(2 * n), 0.5 * (cov + cov.T))
    return state, pre_bell_transform(g[lay.u2])


def recipe_genome(M: int, theta0: float = math.pi / 4) -> CircuitGenome:
    """Encode the beam splitter + M-splitter channel in the general ansatz."""
    r1, r2 = mqc.solve_squeezing(M, theta0)
    n = M + 1
    U = core.embed_unitary(core.m_splitter_unitary(M), n, list(range(1, n))) @ core.embed_unitary(
        core.beam_splitter_unitary(theta0), n, [0, 1]
    )
    thetas, phis, betas = core.reck_decompose(U)
    xi = np.zeros(n)
    xi[0], xi[1] = r1, -r2
    return CircuitGenome(M, np.concatenate([xi, thetas, phis, betas, np.zeros(4)]))


def per_mode_db(xi: np.ndarray) -> np.ndarray:
    """Squeezing magnitude of each source in dB (non-negative)."""
    return 20.0 * np.abs(np.asarray(xi)) / math.log(10.0)


def target_noise(M: int, s: float = 0.0) -> np.ndarray:
    lam = protocol.mqc_excess_noise(M)
    return np.diag([math.exp(2 * s) * lam, math.exp(-2 * s) * lam])


def channel_deviations(ens: protocol.EnsembleChannel, target: np.ndarray) -> np.ndarray:
    """Entry-wise deviations of every clone from unit gain and the target noise."""
    eye = np.eye(2)
    parts = []
    for ch in ens.clones:
        parts.append((ch.noise - target)[np.triu_indices(2)])
        parts.append((ch.gain - eye).ravel())
    return np.concatenate(parts)


def channel_residual(ens: protocol.EnsembleChannel, target: np.ndarray) -> float:
    """Largest entry-wise deviation of any clone from unit gain and the target noise."""
    return float(np.max(np.abs(channel_deviations(ens, target))))


@dataclass(frozen=True)
class Evaluation:
    objective: float
    residual: float
    total_db: float
    channel: protocol.EnsembleChannel | None


def evaluate_genome_full(genome, M: int, penalty_weight: float = 1e4, s: float = 0.0) -> Evaluation:
    """Score a genome.

    ``residual`` is the max-entry deviation of the unit-gain channel from the
    target; the penalty term uses the Euclidean norm of the same deviations,
    which bounds the residual from above and is smooth away from feasibility.
    """
    g = genome.values if isinstance(genome, CircuitGenome) else normalize_genome(genome, M)
    total = float(per_mode_db(g[GenomeLayout(M).xi]).sum())
    state, pre = genome_to_scheme(g, M)
    try:
        ens = protocol.derive_ensemble_channel(state, 0, pre)
        dev = channel_deviations(ens, target_noise(M, s))
        residual, violation = float(np.max(np.abs(dev))), float(np.linalg.norm(dev))
    except (DegeneratePortError, NumericalDegeneracyError):
        ens, residual, violation = None, DEGENERATE_RESIDUAL, DEGENERATE_RESIDUAL
    if not (math.isfinite(residual) and math.isfinite(violation)) or violation > DEGENERATE_RESIDUAL:
        ens, residual, violation = None, min(residual, DEGENERATE_RESIDUAL), DEGENERATE_RESIDUAL
        if not math.isfinite(residual):
            residual = DEGENERATE_RESIDUAL
    return Evaluation(total + penalty_weight * violation, residual, total, ens)


def evaluate_genome(genome, M: int, penalty_weight: float = 1e4, s: float = 0.0) -> tuple[float, float]:
    """``(objective, residual)``; the objective is total dB plus the weighted constraint violation."""
    ev = evaluate_genome_full(genome, M, penalty_weight, s)
    return ev.objective, ev.residual


# --- batched evaluation -------------------------------------------------------


def batch_deviations(genomes: np.ndarray, M: int, s: float = 0.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised counterpart of :func:`channel_deviations` for a stack of genomes.

    Returns ``(total_db, deviations, ok)``; rows with ``ok == False`` have a
    degenerate port and meaningless deviations.  Genomes are used as given
    (no clipping or angle reduction) so finite differences stay smooth.
    """
    G = np.atleast_2d(np.asarray(genomes, dtype=float))
    lay = GenomeLayout(M)
    n, B = lay.n, G.shape[0]
    xi = G[:, lay.xi]
    thetas, phis, betas, u2 = G[:, lay.thetas], G[:, lay.phis], G[:, lay.betas], G[:, lay.u2]

    # product B_1 ··· B_K D built right to left, then inverted
    prod = np.zeros((B, n, n), dtype=complex)
    prod[:, np.arange(n), np.arange(n)] = np.exp(1j * betas)
    for idx in range(lay.n_bs - 1, -1, -1):
        k, l = core.reck_pairs(n)[idx]
        sn, cs = np.sin(thetas[:, idx])[:, None], np.cos(thetas[:, idx])[:, None]
        ph = np.exp(1j * phis[:, idx])[:, None]
        rk, rl = prod[:, k, :].copy(), prod[:, l, :].copy()
        prod[:, k, :] = ph * (sn * rk + cs * rl)
        prod[:, l, :] = cs * rk - sn * rl
    U = np.conj(np.transpose(prod, (0, 2, 1)))

    S = np.empty((B, 2 * n, 2 * n))
    S[:, 0::2, 0::2] = U.real
    S[:, 0::2, 1::2] = -U.imag
    S[:, 1::2, 0::2] = U.imag
    S[:, 1::2, 1::2] = U.real
    var = np.empty((B, 2 * n))
    var[:, 0::2] = core.VACUUM_VARIANCE * np.exp(2 * xi)
    var[:, 1::2] = core.VACUUM_VARIANCE * np.exp(-2 * xi)
    cov = np.einsum("bij,bj,bkj->bik", S, var, S)

    th1, th2, alpha, delta = u2.T
    c1, s1, c2, s2 = np.cos(th1), np.sin(th1), np.cos(th2), np.sin(th2)
    ea, eb = np.exp(1j * alpha), np.exp(-1j * alpha)
    # V = e^{iδ} R(θ1) diag(e^{iα}, e^{-iα}) R(θ2), then the fixed Bell mixer
    V = np.empty((B, 2, 2), dtype=complex)
    V[:, 0, 0] = c1 * ea * c2 - s1 * eb * s2
    V[:, 0, 1] = -c1 * ea * s2 - s1 * eb * c2
    V[:, 1, 0] = s1 * ea * c2 + c1 * eb * s2
    V[:, 1, 1] = -s1 * ea * s2 + c1 * eb * c2
    V *= np.exp(1j * delta)[:, None, None]
    h = 1.0 / math.sqrt(2.0)
    W = np.empty_like(V)
    W[:, 0] = h * (V[:, 0] - V[:, 1])
    W[:, 1] = h * (V[:, 0] + V[:, 1])
    # x_u = Re(W00) x_in − Im(W00) p_in + Re(W01) x_port − Im(W01) p_port, similarly p_v
    row_x = np.stack([W[:, 0, 0].real, -W[:, 0, 0].imag, W[:, 0, 1].real, -W[:, 0, 1].imag], axis=1)
    row_p = np.stack([W[:, 1, 0].imag, W[:, 1, 0].real, W[:, 1, 1].imag, W[:, 1, 1].real], axis=1)
    a, d = row_x[:, 0], row_p[:, 1]
    ok = (np.abs(a) >= protocol.GAIN_FLOOR) & (np.abs(d) >= protocol.GAIN_FLOOR)
    gx = np.where(ok, 1.0 / np.where(ok, a, 1.0), 0.0)
    gp = np.where(ok, 1.0 / np.where(ok, d, 1.0), 0.0)

    T = np.zeros((B, 2 * M, 2 * n))
    for j in range(M):
        T[:, 2 * j, 2 * (j + 1)] = 1.0
        T[:, 2 * j + 1, 2 * (j + 1) + 1] = 1.0
        T[:, 2 * j, 0:2] = gx[:, None] * row_x[:, 2:]
        T[:, 2 * j + 1, 0:2] = gp[:, None] * row_p[:, 2:]
    noise = T @ cov @ np.transpose(T, (0, 2, 1))
    gain_dev = np.stack(
        [gx * row_x[:, 0] - 1.0, gx * row_x[:, 1], gp * row_p[:, 0], gp * row_p[:, 1] - 1.0], axis=1
    )
    target = target_noise(M, s)
    iu = np.triu_indices(2)
    parts = []
    for j in range(M):
        block = noise[:, 2 * j : 2 * j + 2, 2 * j : 2 * j + 2] - target
        parts.append(block[:, iu[0], iu[1]])
        parts.append(gain_dev)
    dev = np.concatenate(parts, axis=1)
    ok &= np.all(np.isfinite(dev), axis=1)
    totals = per_mode_db(xi).sum(axis=1)
    return totals, dev, ok


def batch_evaluate(genomes: np.ndarray, M: int, penalty_weight: float = 1e4, s: float = 0.0):
    """``(objective, residual)`` arrays with the same conventions as :func:`evaluate_genome`."""
    totals, dev, ok = batch_deviations(genomes, M, s)
    residual = np.where(ok, np.max(np.abs(np.where(ok[:, None], dev, 0.0)), axis=1), DEGENERATE_RESIDUAL)
    violation = np.where(ok, np.linalg.norm(np.where(ok[:, None], dev, 0.0), axis=1), DEGENERATE_RESIDUAL)
    residual = np.minimum(residual, DEGENERATE_RESIDUAL)
    violation = np.where(violation > DEGENERATE_RESIDUAL, DEGENERATE_RESIDUAL, violation)
    return totals + penalty_weight * violation, residual


def repair(genomes: np.ndarray, M: int, s: float = 0.0, iterations: int = 8, step: float = 1e-7) -> np.ndarray:
    """Pull genomes onto the constraint surface with minimum-norm Gauss-Newton steps.

    The Jacobian of the deviation vector is taken by forward differences.
    Steps that do not reduce the violation are halved up to four times and
    otherwise rejected, so a genome never leaves repair worse than it entered.
    """
    G = np.array(genomes, dtype=float)
    B, L = G.shape
    xi = GenomeLayout(M).xi
    eye = step * np.eye(L)
    for _ in range(iterations):
        _, dev, ok = batch_deviations(G, M, s)
        norm = np.where(ok, np.linalg.norm(np.where(ok[:, None], dev, 0.0), axis=1), np.inf)
        active = ok & (norm > 1e-13)
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        probes = (G[idx, None, :] + eye[None]).reshape(-1, L)
        _, dev_p, _ = batch_deviations(probes, M, s)
        J = (dev_p.reshape(len(idx), L, -1) - dev[idx, None, :]) / step
        J = np.transpose(J, (0, 2, 1))
        delta = -np.einsum("bij,bj->bi", np.linalg.pinv(J, rcond=1e-10), dev[idx])
        scale = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        for _ in range(5):
            trial = G[idx] + scale[:, None] * delta
            trial[:, xi] = np.clip(trial[:, xi], -XI_BOUND, XI_BOUND)
            _, dev_t, ok_t = batch_deviations(trial, M, s)
            better = ok_t & (np.linalg.norm(np.where(ok_t[:, None], dev_t, 0.0), axis=1) < norm[idx]) & ~accepted
            G[idx[better]] = trial[better]
            accepted |= better
            if accepted.all():
                break
            scale = np.where(accepted, scale, 0.5 * scale)
    return G


@dataclass
class SearchConfig:
    population: int = 64
    generations: int = 400
    mutation_sigma: float = 0.3
    sigma_decay: float = 0.995
    crossover_rate: float = 0.9
    penalty_weight: float = 1e4
    target: str = "symmetric_noise"
    s: float = 0.0
    tolerance: float = 1e-6
    seed: int = 0
    tournament: int = 3
    elitism: int = 2
    fine_fraction: float = 0.5
    fine_decades: int = 4
    repair: bool = True
    repair_iterations: int = 8
    patience: int = 40

    def __post_init__(self):
        if self.population < 4:
            raise InvalidArgumentError(f"population must be >= 4, got {self.population}")
        if self.generations < 1:
            raise InvalidArgumentError(f"generations must be >= 1, got {self.generations}")
        if not self.tolerance > 0:
            raise InvalidArgumentError("tolerance must be positive")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise InvalidArgumentError("crossover_rate must lie in [0, 1]")
        if self.target not in ("symmetric_noise", "fidelity"):
            raise InvalidArgumentError(f"unknown target {self.target!r}")
        if not 0 <= self.elitism < self.population:
            raise InvalidArgumentError("elitism must be smaller than the population")
        if not 1 <= self.tournament <= self.population:
            raise InvalidArgumentError("tournament size must lie in [1, population]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SearchConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"unknown search config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SearchResult:
    M: int
    best_genome: CircuitGenome
    objective: float
    total_squeezing_db: float
    per_mode_db: list[float]
    channel: protocol.GaussianChannel | None
    constraint_residual: float
    history: list[dict] = field(default_factory=list)
    generations_run: int = 0
    config: SearchConfig | None = None

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "objective": self.objective,
            "total_squeezing_db": self.total_squeezing_db,
            "per_mode_db": list(self.per_mode_db),
            "constraint_residual": self.constraint_residual,
            "channel": None if self.channel is None else self.channel.to_dict(),
            "best_genome": self.best_genome.to_dict(),
            "generations_run": self.generations_run,
            "config": None if self.config is None else self.config.to_dict(),
        }


def _random_population(rng: np.random.Generator, layout: GenomeLayout, size: int) -> np.ndarray:
    pop = rng.uniform(0.0, TWO_PI, (size, layout.size))
    pop[:, layout.xi] = rng.uniform(-1.5, 1.5, (size, layout.n))
    return pop


def genetic_search(
    M: int,
    config: SearchConfig | None = None,
    initial: Sequence | None = None,
    progress=None,
) -> SearchResult:
    """Elitist real-coded GA over the general circuit ansatz.

    Each generation keeps ``elitism`` best individuals and breeds the rest by
    tournament selection, uniform crossover and Gaussian mutation.  The
    mutation scale decays geometrically; a ``fine_fraction`` of offspring use
    a scale drawn log-uniformly up to ``fine_decades`` decades smaller.  With
    ``repair`` on, offspring are projected onto the constraint surface before
    scoring, so selection acts on squeezing among (nearly) feasible circuits;
    the penalty still ranks anything repair could not fix.  ``initial``
    genomes replace the first random individuals.  The run stops early once
    the best individual is feasible within ``tolerance`` and its objective has
    not improved for ``patience`` generations.
    """
    config = config or SearchConfig()
    layout = GenomeLayout(M)
    rng = np.random.default_rng(config.seed)
    s = config.s if config.target == "fidelity" else 0.0
    mask = layout.angle_mask()

    def normalize(p):
        p[:, layout.xi] = np.clip(p[:, layout.xi], -XI_BOUND, XI_BOUND)
        p[:, mask] = np.mod(p[:, mask], TWO_PI)
        return p

    def score(p):
        if config.repair:
            p = normalize(repair(p, M, s, config.repair_iterations))
        fit, res = batch_evaluate(p, M, config.penalty_weight, s)
        return p, fit, res

    pop = _random_population(rng, layout, config.population)
    seeded = 0
    for i, g in enumerate(initial or []):
        pop[i] = g.values if isinstance(g, CircuitGenome) else np.asarray(g, dtype=float)
        seeded = i + 1
    pop = normalize(pop)
    # seeded genomes are kept verbatim; only the random ones go through repair
    rest, fit_r, res_r = score(pop[seeded:])
    fit_s, res_s = batch_evaluate(pop[:seeded], M, config.penalty_weight, s)
    pop = np.concatenate([pop[:seeded], rest])
    fit, res = np.concatenate([fit_s, fit_r]), np.concatenate([res_s, res_r])

    history = []
    sigma = config.mutation_sigma
    last_improve, best_seen = 0, math.inf
    n_child = config.population - config.elitism
    for gen in range(config.generations):
        order = np.argsort(fit, kind="stable")
        pop, fit, res = pop[order], fit[order], res[order]
        entry = {
            "generation": gen,
            "best_objective": float(fit[0]),
            "best_total_db": float(per_mode_db(pop[0][layout.xi]).sum()),
            "residual": float(res[0]),
        }
        history.append(entry)
        if progress is not None:
            progress(entry)
        if fit[0] < best_seen - 1e-9:
            best_seen, last_improve = fit[0], gen
        if res[0] < config.tolerance and gen - last_improve >= config.patience:
            break

        contenders = rng.integers(0, config.population, (2, n_child, config.tournament))
        parents_a = pop[contenders[0].min(axis=1)]
        parents_b = pop[contenders[1].min(axis=1)]
        cross = rng.random(n_child) < config.crossover_rate
        pick = (rng.random((n_child, layout.size)) < 0.5) & cross[:, None]
        children = np.where(pick, parents_b, parents_a)
        scale = np.full(n_child, sigma)
        fine = rng.random(n_child) < config.fine_fraction
        scale[fine] *= 10.0 ** (-rng.uniform(0.0, config.fine_decades, fine.sum()))
        children = normalize(children + scale[:, None] * rng.standard_normal((n_child, layout.size)))
        children, child_fit, child_res = score(children)

        pop = np.concatenate([pop[: config.elitism], children])
        fit = np.concatenate([fit[: config.elitism], child_fit])
        res = np.concatenate([res[: config.elitism], child_res])
        sigma *= config.sigma_decay

    order = np.argsort(fit, kind="stable")
    final = pop[order[:1]]
    if config.repair:
        # a longer polish of the winner; repair never increases the violation
        final = normalize(repair(final, M, s, 4 * config.repair_iterations))
    best = CircuitGenome(M, final[0])
    ev = evaluate_genome_full(best, M, config.penalty_weight, s)
    return SearchResult(
        M=M,
        best_genome=best,
        objective=ev.objective,
        total_squeezing_db=ev.total_db,
        per_mode_db=per_mode_db(best.xi).tolist(),
        channel=None if ev.channel is None else ev.channel.clones[0],
        constraint_residual=ev.residual,
        history=history,
        generations_run=len(history),
        config=config,
    )


@dataclass
class SolutionAnalysis:
    sorted_db: list[float]
    near_vacuum: int
    squeezed: int
    auxiliary_vacuum: bool
    pair_db: tuple[float, float] | None
    pair_split: float | None
    total_db: float
    constraint_residual: float

    def to_dict(self) -> dict:
        return asdict(self)

    def summary(self, M: int) -> str:
        lines = [
            f"M = {M}: total squeezing {self.total_db:.4f} dB, residual {self.constraint_residual:.3g}",
            "per-mode dB (sorted): " + ", ".join(f"{v:.4f}" for v in self.sorted_db),
            f"modes below {VACUUM_THRESHOLD_DB} dB: {self.near_vacuum} (expected {M - 1}); "
            f"auxiliary modes at vacuum: {'yes' if self.auxiliary_vacuum else 'no'}",
        ]
        if self.pair_db is not None:
            lines.append(
                f"squeezed pair: {self.pair_db[0]:.4f} dB + {self.pair_db[1]:.4f} dB (split {self.pair_split:.3f})"
            )
        return "\n".join(lines)


def analyze_solution(result: SearchResult | CircuitGenome, M: int | None = None, penalty_weight: float = 1e4) -> SolutionAnalysis:
    """Classify sources into near-vacuum and squeezed, and report how the squeezed pair shares the budget."""
    if isinstance(result, CircuitGenome):
        genome = result
        residual = evaluate_genome(genome, genome.M, penalty_weight)[1]
    else:
        genome = result.best_genome
        residual = result.constraint_residual
    M = genome.M if M is None else M
    dbs = sorted(per_mode_db(genome.xi).tolist())
    near = sum(1 for v in dbs if v < VACUUM_THRESHOLD_DB)
    squeezed = len(dbs) - near
    pair = split = None
    if squeezed == 2:
        pair = (dbs[-2], dbs[-1])
        split = dbs[-1] / (dbs[-2] + dbs[-1])
    return SolutionAnalysis(
        sorted_db=dbs,
        near_vacuum=near,
        squeezed=squeezed,
        auxiliary_vacuum=near == M - 1,
        pair_db=pair,
        pair_split=split,
        total_db=float(sum(dbs)),
        constraint_residual=float(residual),
    )
