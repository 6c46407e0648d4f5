import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvteleclone import core, mqc, protocol
from cvteleclone.errors import DegeneratePortError, InvalidArgumentError


def channel_state(M, theta0=math.pi / 4, s=0.0):
    return mqc.build_mqc(mqc.MqcSpec(M, theta0, s))


def epr_state(r):
    return mqc.build_symmetric_mqc(mqc.SymmetricMqcSpec(1, r))


# --- closed-form oracles ------------------------------------------------------------


@pytest.mark.parametrize("M", range(2, 11))
def test_optimal_noise_and_fidelity(M):
    ens = protocol.derive_ensemble_channel(channel_state(M))
    lam = (M - 1) / (2 * M)
    for ch in ens.clones:
        assert ch.is_unit_gain(1e-12)
        assert np.max(np.abs(ch.noise - lam * np.eye(2))) < 1e-12
    rep = protocol.teleclone_analytic(channel_state(M), protocol.InputSpec())
    assert abs(rep.fidelity_per_clone - M / (2 * M - 1)) < 1e-12


@pytest.mark.parametrize("r", [0.0, 0.3, 1.0, 2.0])
def test_single_receiver_reduces_to_teleportation(r):
    # unit-gain teleportation through an EPR pair of squeezing r adds e^{-2r}/2 per quadrature
    rep = protocol.teleclone_analytic(epr_state(r), protocol.InputSpec(), port=0, receivers=[1])
    lx, lp = rep.excess_noise
    assert lx == pytest.approx(math.exp(-2 * r) / 2, abs=1e-12)
    assert lp == pytest.approx(math.exp(-2 * r) / 2, abs=1e-12)
    assert rep.fidelity_per_clone == pytest.approx(1 / (1 + math.exp(-2 * r)), abs=1e-12)


def test_recipe_channel_gain_is_root_two():
    gx, gp = protocol.solve_unit_gain(channel_state(3), 0)
    assert gx == pytest.approx(math.sqrt(2)) and gp == pytest.approx(math.sqrt(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 7), st.floats(0.02, 0.98))
def test_noise_is_optimal_for_every_admissible_angle(M, frac):
    lo, hi = mqc.theta_bounds(M)
    ens = protocol.derive_ensemble_channel(channel_state(M, lo + frac * (hi - lo)))
    lam = protocol.mqc_excess_noise(M)
    assert np.max(np.abs(ens.clones[0].noise - lam * np.eye(2))) < 1e-9


@pytest.mark.parametrize("M", [2, 3, 5])
@pytest.mark.parametrize("s", [-0.5, 0.5])
def test_matched_squeezed_input(M, s):
    state = channel_state(M, s=s)
    inp = protocol.InputSpec("squeezed", 0.2, -0.1, s)
    rep = protocol.teleclone_analytic(state, inp)
    lam = protocol.mqc_excess_noise(M)
    expected = np.diag([math.exp(2 * s) * lam, math.exp(-2 * s) * lam])
    assert np.max(np.abs(rep.channel.noise - expected)) < 1e-10
    assert abs(rep.fidelity_per_clone - M / (2 * M - 1)) < 1e-10


def test_mismatched_squeezing_is_suboptimal():
    rep = protocol.teleclone_analytic(channel_state(2, s=0.5), protocol.InputSpec())
    assert rep.fidelity_per_clone < 2 / 3 - 1e-3


def test_clone_fidelity_formula_matches_gaussian_overlap():
    rng = np.random.default_rng(0)
    for _ in range(20):
        lx, lp, s = rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(-0.7, 0.7)
        psi = core.squeezed_coherent(0.4, -0.2, s)
        out = protocol.GaussianChannel(np.eye(2), np.diag([lx, lp])).apply(psi)
        assert protocol.clone_fidelity(lx, lp, s) == pytest.approx(core.gaussian_fidelity(psi, out), abs=1e-13)


def test_classical_benchmark_is_one_half():
    ch = protocol.classical_channel()
    psi = core.coherent(1.0, 2.0)
    assert core.gaussian_fidelity(psi, ch.apply(psi)) == pytest.approx(0.5)
    assert protocol.optimal_fidelity(10**6) == pytest.approx(0.5, abs=1e-6)


def test_channel_is_input_independent():
    ens = protocol.derive_ensemble_channel(channel_state(3))
    for x0, p0 in [(0, 0), (2.5, -1.0)]:
        out = ens.output_state(core.coherent(x0, p0))
        for j in range(3):
            assert np.allclose(out.mean[2 * j : 2 * j + 2], [x0, p0], atol=1e-12)


@pytest.mark.parametrize("M", [2, 3, 4])
def test_joint_output_is_clone_symmetric(M):
    out = protocol.derive_ensemble_channel(channel_state(M)).output_state(core.coherent(0.3, 0.1))
    ok, worst = protocol.verify_output_symmetry(out.cov)
    assert ok and worst < 1e-12


def test_output_symmetry_detects_asymmetry():
    cov = 0.25 * np.eye(4)
    cov[0, 0] = 0.3
    ok, worst = protocol.verify_output_symmetry(cov)
    assert not ok and worst == pytest.approx(0.05)


def test_degenerate_port_raises():
    swap = core.passive_symplectic(np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(DegeneratePortError):
        protocol.derive_ensemble_channel(channel_state(2), pre_bell=swap)


def test_receiver_validation():
    with pytest.raises(InvalidArgumentError):
        protocol.derive_ensemble_channel(channel_state(2), receivers=[0, 1])
    with pytest.raises(InvalidArgumentError):
        protocol.derive_ensemble_channel(channel_state(2), port=5)


def test_input_spec_validation():
    with pytest.raises(InvalidArgumentError):
        protocol.InputSpec("cat")
    with pytest.raises(InvalidArgumentError):
        protocol.InputSpec("coherent", s_in=0.2)
    with pytest.raises(InvalidArgumentError):
        protocol.InputSpec(x0=float("inf"))


# --- symmetric 2M-mode channel -------------------------------------------------------


@pytest.mark.parametrize("M", [2, 3])
def test_symmetric_channel_converges_monotonically(M):
    fids = []
    for r in [0.5, 1.0, 2.0, 3.0]:
        state = mqc.build_symmetric_mqc(mqc.SymmetricMqcSpec(M, r))
        rep = protocol.teleclone_analytic(state, protocol.InputSpec(), port=0, receivers=range(M, 2 * M))
        fids.append(rep.fidelity_per_clone)
    assert all(b > a for a, b in zip(fids, fids[1:]))
    assert fids[-1] >= 0.99 * M / (2 * M - 1)
    assert fids[-1] < M / (2 * M - 1)


@pytest.mark.parametrize("M", [2, 3])
def test_any_left_mode_serves_as_port(M):
    state = mqc.build_symmetric_mqc(mqc.SymmetricMqcSpec(M, 1.3))
    ref = None
    for port in range(M):
        rep = protocol.teleclone_analytic(state, protocol.InputSpec(), port=port, receivers=range(M, 2 * M))
        if ref is None:
            ref = rep.fidelity_per_clone
        assert abs(rep.fidelity_per_clone - ref) < 1e-10


# --- Monte Carlo -------------------------------------------------------------------------


def test_mc_agrees_with_ensemble_channel():
    state = channel_state(3, theta0=0.8)
    inp = protocol.InputSpec("coherent", 0.7, -0.4)
    trials = 40_000
    mc = protocol.run_teleclone_mc(state, inp, trials=trials, seed=4)
    exact = protocol.teleclone_analytic(state, inp)
    assert abs(mc.fidelity_per_clone - exact.fidelity_per_clone) < 4 * mc.fidelity_stderr
    assert np.allclose(mc.excess_noise, exact.excess_noise, atol=5 / math.sqrt(trials))
    assert np.allclose(mc.clone_mean, [0.7, -0.4], atol=0.02)


def test_mc_joint_covariance_matches_channel():
    state = channel_state(2)
    samples = protocol.sample_clones(state, core.coherent(0, 0), 60_000, seed=9)
    ens = protocol.derive_ensemble_channel(state)
    expected = ens.output_state(core.coherent(0, 0)).cov
    assert np.allclose(np.cov(samples, rowvar=False), expected, atol=0.02)


def test_mc_substreams_are_stable_prefixes():
    state = channel_state(2)
    psi = core.coherent(0, 0)
    short = protocol.sample_clones(state, psi, 5000, seed=1)
    long = protocol.sample_clones(state, psi, 10_000, seed=1)
    assert np.array_equal(short, long[:5000])


def test_mc_is_deterministic_and_seed_sensitive():
    state = channel_state(2)
    a = protocol.run_teleclone_mc(state, protocol.InputSpec(), trials=3000, seed=2).to_dict()
    b = protocol.run_teleclone_mc(state, protocol.InputSpec(), trials=3000, seed=2).to_dict()
    c = protocol.run_teleclone_mc(state, protocol.InputSpec(), trials=3000, seed=3).to_dict()
    assert a == b
    assert a["fidelity_per_clone"] != c["fidelity_per_clone"]


def test_mc_rejects_zero_trials():
    with pytest.raises(InvalidArgumentError):
        protocol.sample_clones(channel_state(2), core.coherent(0, 0), 0, seed=0)


def test_report_serialisation():
    rep = protocol.teleclone_analytic(channel_state(2), protocol.InputSpec()).to_dict()
    assert rep["method"] == "analytic" and "version" in rep and "trials" not in rep
    mc = protocol.run_teleclone_mc(channel_state(2), protocol.InputSpec(), trials=500, seed=0).to_dict()
    assert mc["trials"] == 500 and mc["seed"] == 0
