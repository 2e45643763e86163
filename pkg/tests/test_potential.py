import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from phase_minmax.errors import ParameterError
from phase_minmax.potential import (
    BETA_STANDARD, STANDARD_WELL, DoubleWell, TruncatedProfile, estimate_beta, eval_well,
    profile_1d, profile_derivative, profile_energy, profile_shooting, q_density, sigma_constant,
    truncated_profile, well_constants,
)

SIGMA = np.sqrt(2.0) / 3.0


# --- eval_well --------------------------------------------------------------

def test_well_minimum():
    assert eval_well(1.0) == pytest.approx((0.0, 0.0, 2.0), abs=1e-15)
    assert eval_well(-1.0) == pytest.approx((0.0, 0.0, 2.0), abs=1e-15)


def test_well_at_zero():
    assert eval_well(0.0) == pytest.approx((0.25, 0.0, -1.0), abs=1e-15)


def test_well_linear_branch_value():
    # cubic blend from (9/4, 6, 11) at t = 2 with zero curvature at 3:
    # W(3) = 9/4 + 6 + 11/2 - 11/6 = 143/12, W'(3) = 23/2, so W(3.5) = 53/3
    w, dw, ddw = eval_well(3.5)
    assert w == pytest.approx(53.0 / 3.0, rel=1e-14)
    assert dw == pytest.approx(11.5, rel=1e-14)
    assert ddw == 0.0
    assert eval_well(-3.5)[0] == pytest.approx(53.0 / 3.0, rel=1e-14)


@pytest.mark.parametrize("edge", [2.0, -2.0, 3.0, -3.0])
def test_well_is_c2_at_joins(edge):
    h = 1e-9
    lo = np.array(eval_well(edge - h))
    hi = np.array(eval_well(edge + h))
    assert np.allclose(lo, hi, atol=1e-6)


def test_well_three_critical_points():
    t = np.linspace(-10, 10, 200001)
    dw = STANDARD_WELL.first(t)
    s = np.sign(dw)
    crossings = t[np.nonzero(s[:-1] * s[1:] <= 0)[0]]
    # each zero of W' may show up on two adjacent samples
    groups = np.split(crossings, np.nonzero(np.diff(crossings) > 1e-3)[0] + 1)
    centres = [g.mean() for g in groups]
    assert np.allclose(centres, [-1.0, 0.0, 1.0], atol=1e-4)


@given(st.floats(-50, 50, allow_nan=False))
def test_well_positive_off_wells(t):
    w = eval_well(t)[0]
    if abs(abs(t) - 1.0) > 1e-6:
        assert w > 0.0
    assert w >= 0.0


# --- sigma ------------------------------------------------------------------

def test_sigma_closed_form():
    assert sigma_constant() == pytest.approx(SIGMA, abs=1e-12)


def test_sigma_scaled_well_doubles():
    assert sigma_constant(DoubleWell(4.0)) == pytest.approx(2.0 * SIGMA, rel=1e-12)


def test_sigma_riemann_oracle():
    N = 10 ** 6
    s = -1.0 + (np.arange(N) + 0.5) * (2.0 / N)
    riemann = np.sum(np.sqrt((1 - s * s) ** 2 / 8.0)) * (2.0 / N)
    assert abs(riemann - sigma_constant()) < 1e-8


# --- profile ----------------------------------------------------------------

def test_profile_at_zero():
    assert profile_1d(0.0) == 0.0


def test_profile_tanh_value():
    assert profile_1d(np.sqrt(2.0)) == pytest.approx(np.tanh(1.0), abs=1e-15)


def test_profile_matches_shooting_oracle():
    t = np.linspace(-6, 6, 101)
    assert np.max(np.abs(profile_shooting(t) - profile_1d(t))) < 1e-6


@given(st.floats(-30, 30, allow_nan=False))
def test_profile_odd(t):
    assert profile_1d(-t) == -profile_1d(t)


def test_profile_solves_ode():
    t = np.linspace(-4, 4, 81)
    h = 1e-4
    dd = (profile_1d(t + h) - 2 * profile_1d(t) + profile_1d(t - h)) / h ** 2
    assert np.max(np.abs(dd - STANDARD_WELL.first(profile_1d(t)))) < 1e-6


def test_profile_limits():
    assert profile_1d(40.0) == pytest.approx(1.0, abs=1e-15)
    assert profile_1d(-40.0) == pytest.approx(-1.0, abs=1e-15)


def test_shooting_first_integral_scaled_well():
    well = DoubleWell(2.0)
    t = np.linspace(0.0, 3.0, 31)
    h = profile_shooting(t, well)
    dh = profile_derivative(t, well)
    assert np.allclose(0.5 * dh ** 2, well.value(h), atol=1e-12)
    # profile of scale*W is H(sqrt(scale) t)
    assert np.max(np.abs(h - np.tanh(np.sqrt(2.0) * t / np.sqrt(2.0)))) < 1e-6


# --- truncation -------------------------------------------------------------

def test_truncated_saturates():
    assert truncated_profile(0.01, 0.3) == 1.0
    assert truncated_profile(0.01, -0.3) == -1.0


def test_truncated_zero():
    assert truncated_profile(0.01, 0.0) == 0.0


def test_truncated_equals_profile_in_plateau():
    eps = 0.05
    L = TruncatedProfile(eps).Lambda
    t = np.linspace(-eps * L, eps * L, 1001)[1:-1]
    assert np.array_equal(truncated_profile(eps, t), profile_1d(t / eps))


@pytest.mark.parametrize("eps", [0.0, -0.1, 0.25, 0.3, np.nan])
def test_truncated_rejects_bad_eps(eps):
    with pytest.raises(ParameterError):
        truncated_profile(eps, 0.1)


@given(st.floats(1e-4, 0.2), st.floats(0.0, 1.0))
@settings(max_examples=50)
def test_truncated_odd_and_saturated(eps, frac):
    prof = TruncatedProfile(eps)
    t = frac * 3 * prof.support
    assert prof.value(-t) == -prof.value(t)
    if t >= prof.support:
        assert prof.value(t) == 1.0


def test_truncated_monotone():
    for eps in (0.2, 0.05, 0.01):
        prof = TruncatedProfile(eps)
        t = np.linspace(-1.2 * prof.support, 1.2 * prof.support, 10 ** 4)
        assert np.min(np.diff(prof.value(t))) >= -1e-12


# --- Q density and energy ---------------------------------------------------

@given(st.floats(1e-3, 0.2), st.floats(-1.0, 1.0))
@settings(max_examples=50)
def test_q_nonnegative_and_supported(eps, t):
    q = q_density(eps, t)
    assert q >= 0.0
    if abs(t) >= TruncatedProfile(eps).support:
        assert q == 0.0


def test_profile_energy_within_beta():
    eps = 0.01
    e = profile_energy(eps)
    assert 2 * SIGMA - BETA_STANDARD * eps ** 2 < e < 2 * SIGMA + BETA_STANDARD * eps ** 2


def test_profile_energy_fine_grid_oracle():
    eps = 0.05
    delta = TruncatedProfile(eps).support
    t = np.linspace(-delta, delta, 400001)
    oracle = np.trapezoid(q_density(eps, t), t)
    assert abs(oracle - 2 * SIGMA) < 1e-3
    assert abs(profile_energy(eps) - oracle) < 1e-8


def test_beta_bound_on_sweep():
    for eps in np.geomspace(1e-3, 0.2, 20):
        assert abs(profile_energy(eps) - 2 * SIGMA) <= BETA_STANDARD * eps ** 2


def test_frozen_beta_dominates_refit():
    assert estimate_beta() <= BETA_STANDARD
    assert well_constants().beta == BETA_STANDARD


def test_q_integral_uniform_vs_adaptive():
    eps = 0.05
    delta = TruncatedProfile(eps).support
    t = np.linspace(-delta, delta, 200001)
    uniform = np.trapezoid(q_density(eps, t), t)
    adaptive, _ = quad(lambda x: q_density(eps, x), -delta, delta, limit=400,
                       points=[-eps, 0.0, eps], epsabs=1e-13, epsrel=1e-12)
    assert abs(uniform - adaptive) / adaptive <= 1e-6
