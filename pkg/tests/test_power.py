import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from sensing_ee.oracle import lagrangian_integrand, stationarity_residual, threshold_power_peak
from sensing_ee.power import (BUSY, IDLE, Constraints, DualState, Regime, UnboundedPowerError,
                              optimal_power_avg, optimal_power_peak)
from sensing_ee.rate import SystemParams
from sensing_ee.sensing import SensingSpec, branch_probs

PARAMS = SystemParams()

pos = st.floats(1e-3, 10.0)
nonneg = st.one_of(st.just(0.0), st.floats(1e-3, 10.0))
probability = st.floats(0.05, 0.95)


@st.composite
def setups(draw):
    spec = SensingSpec(draw(st.floats(0.5, 1.0)), draw(st.floats(0.0, 0.5)))
    duals = DualState(draw(nonneg), draw(nonneg), draw(nonneg))
    return spec, branch_probs(spec), duals, draw(pos), draw(pos), draw(st.sampled_from([IDLE, BUSY]))


def test_idle_power_perfect_sensing(perfect, perfect_probs):
    p = optimal_power_avg(IDLE, PARAMS, perfect, perfect_probs, 1.0, 1.0, DualState(alpha=1.0))
    assert p == pytest.approx(0.9 * math.log2(math.e) - 0.2, rel=1e-12)
    assert p == pytest.approx(1.09843, abs=1e-5)


def test_zero_link_gain_gives_zero(imperfect):
    probs = branch_probs(imperfect)
    for k in (IDLE, BUSY):
        assert optimal_power_avg(k, PARAMS, imperfect, probs, 0.0, 1.0, DualState(1.0, 1.0, 1.0)) == 0.0
        assert optimal_power_avg(k, PARAMS, imperfect, probs, 1e-9, 1.0, DualState(1.0)) == 0.0


def test_zero_price_is_unbounded(perfect, perfect_probs):
    # idle branch under perfect sensing carries no interference price
    with pytest.raises(UnboundedPowerError):
        optimal_power_avg(IDLE, PARAMS, perfect, perfect_probs, 1.0, 1.0, DualState(0, 0, 5.0))


def test_vectorized_matches_scalar(imperfect):
    probs = branch_probs(imperfect)
    h = np.array([0.1, 0.5, 2.0, 0.0])
    g = np.array([0.3, 1.0, 0.2, 4.0])
    duals = DualState(1.2, 0.3, 0.8)
    vec = optimal_power_avg(BUSY, PARAMS, imperfect, probs, h, g, duals)
    for i in range(4):
        assert vec[i] == optimal_power_avg(BUSY, PARAMS, imperfect, probs, h[i], g[i], duals)


@settings(max_examples=300, deadline=None)
@given(setups())
def test_interior_power_zeroes_stationarity(setup):
    spec, probs, duals, h, g, k = setup
    assume(duals.alpha + duals.lam > 0)
    p = optimal_power_avg(k, PARAMS, spec, probs, h, g, duals)
    res = stationarity_residual(k, PARAMS, spec, probs, h, g, duals, p)
    if p > 0:
        scale = (duals.lam + duals.alpha) * probs.decision(k) + duals.nu * g
        assert abs(res) <= 1e-10 * max(scale, 1.0)
    else:
        assert res <= 1e-12


@settings(max_examples=150, deadline=None)
@given(setups())
def test_closed_form_beats_dense_grid(setup):
    spec, probs, duals, h, g, k = setup
    assume(duals.alpha + duals.lam > 0)
    p = optimal_power_avg(k, PARAMS, spec, probs, h, g, duals)
    grid = np.linspace(0.0, 4 * p + 1.0, 20001)
    vals = lagrangian_integrand(k, PARAMS, spec, probs, h, g, duals, grid)
    best = lagrangian_integrand(k, PARAMS, spec, probs, h, g, duals, p)
    assert best >= vals.max() - 1e-12
    assert abs(grid[np.argmax(vals)] - p) <= 2 * (grid[1] - grid[0])


def test_peak_without_prices_transmits_at_peak(imperfect):
    probs = branch_probs(imperfect)
    cons = Constraints.peak(0.7, 0.5, p_peak_busy=0.3)
    assert optimal_power_peak(IDLE, PARAMS, imperfect, probs, 0.4, 2.0, DualState(), cons) == 0.7
    assert optimal_power_peak(BUSY, PARAMS, imperfect, probs, 0.4, 2.0, DualState(), cons) == 0.3


def test_peak_large_interference_gain_silences(imperfect):
    probs = branch_probs(imperfect)
    cons = Constraints.peak(1.0, 0.5)
    duals = DualState(alpha=0.5, nu=1.0)
    for k in (IDLE, BUSY):
        assert optimal_power_peak(k, PARAMS, imperfect, probs, 1.0, 1e6, duals, cons) == 0.0


def test_peak_interior_point(imperfect):
    probs = branch_probs(imperfect)
    cons = Constraints.peak(1.0, 0.5)
    duals = DualState(alpha=0.3, lam=7.0, nu=0.5)  # lam must be ignored
    p = optimal_power_peak(BUSY, PARAMS, imperfect, probs, 1.0, 0.5, duals, cons)
    assert 0.0 < p < 1.0
    free = DualState(alpha=0.3, nu=0.5)
    assert abs(stationarity_residual(BUSY, PARAMS, imperfect, probs, 1.0, 0.5, free, p)) < 1e-12


def test_peak_needs_peak_regime(imperfect):
    with pytest.raises(ValueError):
        optimal_power_peak(IDLE, PARAMS, imperfect, branch_probs(imperfect), 1.0, 1.0,
                           DualState(1.0), Constraints.average(1.0, 1.0))


@settings(max_examples=400, deadline=None)
@given(setups(), st.floats(0.01, 5.0))
def test_clamp_form_equals_threshold_form(setup, peak):
    spec, probs, duals, h, g, k = setup
    cons = Constraints.peak(peak, 1.0)
    clamp = optimal_power_peak(k, PARAMS, spec, probs, h, g, duals, cons)
    thresh = threshold_power_peak(k, PARAMS, spec, probs, h, g, duals, cons)
    assert clamp == pytest.approx(thresh, rel=1e-12, abs=1e-14)
    if duals.alpha + duals.lam > 0 or duals.nu > 0:
        free = DualState(duals.alpha, 0.0, duals.nu)
        try:
            unclamped = optimal_power_avg(k, PARAMS, spec, probs, h, g, free)
        except UnboundedPowerError:
            unclamped = math.inf
        assert clamp == min(peak, unclamped)


@settings(max_examples=200, deadline=None)
@given(setups(), st.sampled_from(["alpha", "lam", "nu"]), st.floats(0.01, 2.0))
def test_power_monotone_in_prices(setup, which, bump):
    spec, probs, duals, h, g, k = setup
    assume(duals.alpha + duals.lam > 0)
    base = optimal_power_avg(k, PARAMS, spec, probs, h, g, duals)
    raised = DualState(**{**duals.__dict__, which: getattr(duals, which) + bump})
    assert optimal_power_avg(k, PARAMS, spec, probs, h, g, raised) <= base
    assert optimal_power_avg(k, PARAMS, spec, probs, h, g + bump, duals) <= base
    assert optimal_power_avg(k, PARAMS, spec, probs, h + bump, g, duals) >= base


def test_perfect_sensing_idle_ignores_interference_price(perfect, perfect_probs):
    # classical spectrum-sharing structure: idle-sensed power depends on |h|^2 only
    h = np.linspace(0.1, 3.0, 7)
    for nu in (0.0, 0.5, 50.0):
        for g in (0.01, 1.0, 100.0):
            p = optimal_power_avg(IDLE, PARAMS, perfect, perfect_probs, h, g,
                                  DualState(alpha=0.0, lam=1.0, nu=nu))
            np.testing.assert_array_equal(
                p, optimal_power_avg(IDLE, PARAMS, perfect, perfect_probs, h, 1.0,
                                     DualState(alpha=0.0, lam=1.0)))


@pytest.mark.parametrize("kwargs", [
    dict(q_avg=1.0, p_avg=None),
    dict(q_avg=1.0, p_avg=1.0, p_peak_idle=1.0),
    dict(q_avg=1.0, p_peak_idle=1.0, regime=Regime.PEAK),
    dict(q_avg=-1.0, p_avg=1.0),
    dict(q_avg=1.0, p_avg=0.0),
])
def test_invalid_constraints(kwargs):
    with pytest.raises(ValueError):
        Constraints(**kwargs)


def test_dual_state_rejects_negative():
    with pytest.raises(ValueError):
        DualState(alpha=-1.0)
