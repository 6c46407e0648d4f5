import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvteleclone import core, mqc
from cvteleclone.errors import DomainError, InvalidArgumentError


def interior_thetas(M, count=5):
    lo, hi = mqc.theta_bounds(M)
    return np.linspace(lo, hi, count + 2)[1:-1]


def test_theta_bounds_values():
    lo, hi = mqc.theta_bounds(2)
    assert math.sin(lo) == pytest.approx(1 / math.sqrt(3))
    assert math.sin(hi) == pytest.approx(math.sqrt(2 / 3))
    assert lo < math.pi / 4 < hi


@pytest.mark.parametrize("M", [2, 3, 4, 5, 9])
def test_squeezing_is_equal_at_quarter_pi(M):
    r1, r2 = mqc.solve_squeezing(M, math.pi / 4)
    assert r1 == pytest.approx(r2, abs=1e-12)
    # e^{-2r} = (√M − 1)/(√M + 1)
    assert math.exp(-2 * r1) == pytest.approx((math.sqrt(M) - 1) / (math.sqrt(M) + 1), abs=1e-14)


def test_asymmetric_angle_gives_distinct_finite_squeezing():
    r1, r2 = mqc.solve_squeezing(2, 0.7)
    assert math.isfinite(r1) and math.isfinite(r2)
    assert abs(r1 - r2) > 0.1


@pytest.mark.parametrize("theta", [0.0, 0.6, 1.0, math.pi / 2, float("nan")])
def test_out_of_domain_angles_raise(theta):
    with pytest.raises(DomainError):
        mqc.solve_squeezing(2, theta)


def test_domain_error_names_the_bound():
    with pytest.raises(DomainError, match="lower bound"):
        mqc.MqcSpec(2, 0.5)
    with pytest.raises(DomainError, match="upper bound"):
        mqc.MqcSpec(2, 1.0)


@pytest.mark.parametrize("M", [1, 0, -3, 2.5, True])
def test_degenerate_M_rejected(M):
    with pytest.raises(InvalidArgumentError):
        mqc.MqcSpec(M)


@pytest.mark.parametrize("M,db", [(2, -7.66), (3, -5.72), (4, -4.77), (5, -4.18)])
def test_equal_squeezing_table(M, db):
    assert mqc.equal_squeezing_db(M) == pytest.approx(db, abs=0.01)


def test_equal_squeezing_tends_to_zero():
    vals = [mqc.equal_squeezing_db(M) for M in range(2, 40)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] > -1.5


def test_squeezing_db_sign_and_scale():
    assert mqc.squeezing_db(0.0) == 0.0
    assert mqc.squeezing_db(-0.5) == mqc.squeezing_db(0.5)
    assert mqc.squeezing_db(math.log(10) / 20) == pytest.approx(-1.0)


def test_spec_round_trip():
    spec = mqc.MqcSpec(3, 0.8, 0.2)
    back = mqc.MqcSpec.from_dict({k: spec.to_dict()[k] for k in ("M", "theta0", "s")})
    assert back == spec
    with pytest.raises(InvalidArgumentError):
        mqc.MqcSpec.from_dict({"M": 2, "bogus": 1})


@pytest.mark.parametrize("M", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("s", [-0.5, 0.0, 0.5])
def test_closed_form_matches_circuit(M, s):
    for th in interior_thetas(M):
        spec = mqc.MqcSpec(M, float(th), s)
        circuit = mqc.build_mqc(spec).cov
        closed = mqc.closed_form_covariance(spec).cov
        assert np.max(np.abs(circuit - closed)) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.floats(0.05, 0.95), st.floats(-0.8, 0.8))
def test_channel_state_is_pure_gaussian(M, frac, s):
    lo, hi = mqc.theta_bounds(M)
    spec = mqc.MqcSpec(M, lo + frac * (hi - lo), s)
    state = mqc.build_mqc(spec)
    assert state.is_pure()
    assert np.allclose(state.mean, 0)


@pytest.mark.parametrize("M", [2, 3, 4])
def test_prefactor_matches_pure_state_normalisation(M):
    spec = mqc.MqcSpec(M, 0.8 if M == 2 else math.pi / 4, 0.3)
    assert mqc.wigner_prefactor(spec) == pytest.approx((2 / math.pi) ** (M + 1), rel=1e-9)


def test_receivers_are_exchangeable():
    state = mqc.build_mqc(mqc.MqcSpec(4, 0.8, 0.1))
    for j in range(2, 5):
        swapped = core.permute_modes(state, [0, j] + [k for k in range(1, 5) if k != j])
        assert np.allclose(swapped.cov, state.cov, atol=1e-12)


def test_port_marginal_is_thermal_like():
    state = mqc.build_mqc(mqc.MqcSpec(2))
    port = core.partial_trace(state, [0])
    assert not port.is_pure()
    assert port.is_physical()


@pytest.mark.parametrize("M", [1, 2, 3])
def test_symmetric_channel_layout(M):
    spec = mqc.SymmetricMqcSpec(M, 0.8)
    state = mqc.build_symmetric_mqc(spec)
    assert state.num_modes == 2 * M
    assert state.is_pure()
    if M == 1:
        # a plain two-mode squeezed vacuum: x-correlated, p-anticorrelated or vice versa
        c = state.cov
        assert c[0, 0] == pytest.approx(math.cosh(1.6) / 4)
        assert abs(c[0, 2]) == pytest.approx(math.sinh(1.6) / 4)


def test_symmetric_spec_validation():
    with pytest.raises(InvalidArgumentError):
        mqc.SymmetricMqcSpec(2, -0.1)
    with pytest.raises(InvalidArgumentError):
        mqc.SymmetricMqcSpec(0, 1.0)
    with pytest.raises(InvalidArgumentError):
        mqc.SymmetricMqcSpec(2, float("inf"))
