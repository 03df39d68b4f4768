import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import db
from sensing_ee.channel import ChannelSampleSet, FadingConfig, draw_samples
from sensing_ee.optimizer import solve
from sensing_ee.oracle import (GridSpec, best_adaptive_policy, best_constant_policy,
                               project_feasible, stationarity_residual)
from sensing_ee.power import BUSY, IDLE, Constraints, DualState, optimal_power_avg
from sensing_ee.rate import PowerPolicy, SystemParams, power_accounting
from sensing_ee.sensing import SensingSpec, branch_probs

LOOSE = Constraints.average(1e6, 1e6)


@pytest.fixture(scope="module")
def small():
    return draw_samples(FadingConfig(n_samples=200, seed=7))


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(p_min=1.0, p_max=1.0)
    with pytest.raises(ValueError):
        GridSpec(n_points=1)
    with pytest.raises(ValueError):
        GridSpec(p_min=0.0, spacing="geometric")
    with pytest.raises(ValueError):
        GridSpec(spacing="log")
    pts = GridSpec(0.0, 1.0, 5, "linear").points()
    np.testing.assert_allclose(pts, [0, 0.25, 0.5, 0.75, 1.0])


def test_refined_grid_contains_original():
    g = GridSpec(1e-2, 10.0, 11)
    fine = g.refined().points()
    assert fine.size == 21
    np.testing.assert_allclose(fine[::2], g.points(), rtol=1e-12)


def test_peak_regime_pair_within_peaks(params, imperfect, small):
    cons = Constraints.peak(0.5, 1e6, 0.3)
    best = best_constant_policy(params, imperfect, cons, small, GridSpec(1e-3, 10.0, 60))
    assert best.p_idle <= 0.5 and best.p_busy <= 0.3
    assert best.breakdown.ee > 0


def test_constant_matches_scalar_sweep(params, imperfect):
    # one realization |h|^2 = 1: the 2-D optimum is never worse than the best
    # common power on the same grid
    single = ChannelSampleSet.single(1.0)
    grid = GridSpec(1e-3, 10.0, 200)
    probs = branch_probs(imperfect)
    diag = [power_accounting(params, probs, imperfect, single,
                             PowerPolicy.constant(1, p)).ee for p in grid.points()]
    best = best_constant_policy(params, imperfect, LOOSE, single, grid)
    assert best.breakdown.ee >= max(diag) - 1e-12


def test_identical_branches_peak_on_diagonal(imperfect):
    # without primary signal both branches see the same disturbance, so the
    # 2-D maximizer sits within one grid cell of the 1-D bell peak
    params = SystemParams(primary_power=0.0)
    single = ChannelSampleSet.single(1.0)
    grid = GridSpec(1e-3, 10.0, 200)
    probs = branch_probs(imperfect)
    diag = np.array([power_accounting(params, probs, imperfect, single,
                                      PowerPolicy.constant(1, p)).ee for p in grid.points()])
    ratio = grid.points()[1] / grid.points()[0]
    p_star = grid.points()[int(np.argmax(diag))]
    best = best_constant_policy(params, imperfect, LOOSE, single, grid)
    assert best.breakdown.ee == pytest.approx(diag.max(), rel=1e-12)
    for p in (best.p_idle, best.p_busy):
        assert p_star / ratio * (1 - 1e-9) <= p <= p_star * ratio * (1 + 1e-9)


def test_empty_feasible_set_returns_zero_policy(imperfect, small):
    params = SystemParams(circuit_power=0.0)
    cons = Constraints.average(1.0, 0.0)
    best = best_constant_policy(params, imperfect, cons, small, GridSpec(1e-2, 1.0, 10))
    assert (best.p_idle, best.p_busy) == (0.0, 0.0)
    assert best.breakdown.ee == 0.0


def test_constant_dominated_by_solver(params, imperfect):
    fading = FadingConfig(n_samples=500, seed=3)
    samples = draw_samples(fading)
    cons = Constraints.average(db(-4), db(-8))
    res = solve(params, imperfect, cons, fading, samples=samples)
    best = best_constant_policy(params, imperfect, cons, samples)
    assert best.breakdown.ee <= res.ee_opt * 1.005


def test_oracle_is_bit_reproducible(params, imperfect, small):
    cons = Constraints.average(db(-4), db(-8))
    a = best_constant_policy(params, imperfect, cons, small, GridSpec(1e-3, 10.0, 50))
    b = best_constant_policy(params, imperfect, cons, small, GridSpec(1e-3, 10.0, 50))
    assert a == b
    tiny = draw_samples(FadingConfig(n_samples=10, seed=1))
    pa, ba = best_adaptive_policy(params, imperfect, cons, tiny)
    pb, bb = best_adaptive_policy(params, imperfect, cons, tiny)
    assert ba == bb
    np.testing.assert_array_equal(pa.p_idle, pb.p_idle)


@pytest.mark.parametrize("n", [5, 17, 40])
def test_refinement_never_decreases(params, imperfect, small, n):
    cons = Constraints.average(db(-4), db(-8))
    grid = GridSpec(1e-3, 10.0, n)
    coarse = best_constant_policy(params, imperfect, cons, small, grid).breakdown.ee
    fine = best_constant_policy(params, imperfect, cons, small, grid.refined()).breakdown.ee
    assert fine >= coarse


def test_residual_brackets_interior_root(params, imperfect):
    probs = branch_probs(imperfect)
    duals = DualState(alpha=0.5, lam=0.2, nu=0.3)
    for k in (IDLE, BUSY):
        p = optimal_power_avg(k, params, imperfect, probs, 1.5, 0.4, duals)
        assert p > 1e-3
        r = stationarity_residual(k, params, imperfect, probs, 1.5, 0.4, duals, p)
        assert abs(r) <= 1e-10
        lo = stationarity_residual(k, params, imperfect, probs, 1.5, 0.4, duals, p - 1e-3)
        hi = stationarity_residual(k, params, imperfect, probs, 1.5, 0.4, duals, p + 1e-3)
        assert lo > 0 > hi


def test_residual_nonpositive_when_clamped(params, imperfect):
    probs = branch_probs(imperfect)
    duals = DualState(alpha=5.0, lam=1.0, nu=4.0)
    p = optimal_power_avg(BUSY, params, imperfect, probs, 0.05, 2.0, duals)
    assert p == 0.0
    assert stationarity_residual(BUSY, params, imperfect, probs, 0.05, 2.0, duals, 0.0) <= 0


def test_adaptive_oracle_matches_solver(params, imperfect):
    fading = FadingConfig(n_samples=20, seed=11)
    samples = draw_samples(fading)
    cons = Constraints.average(db(-4), db(-8))
    res = solve(params, imperfect, cons, fading, samples=samples)
    _, bd = best_adaptive_policy(params, imperfect, cons, samples)
    assert res.ee_opt == pytest.approx(bd.ee, rel=5e-3)


@settings(max_examples=30, deadline=None)
@given(scale=st.floats(0.0, 50.0), seed=st.integers(0, 2**16))
def test_projection_is_feasible(scale, seed):
    params = SystemParams()
    imperfect = SensingSpec(0.8, 0.1, 0.4, 0.6)
    rng = np.random.default_rng(seed)
    samples = draw_samples(FadingConfig(n_samples=30, seed=seed))
    cons = Constraints.average(db(-4), db(-8))
    pol = PowerPolicy(scale * rng.random(30), scale * rng.random(30))
    out = project_feasible(params, imperfect, cons, samples, pol)
    bd = power_accounting(params, branch_probs(imperfect), imperfect, samples, out)
    assert bd.avg_tx_power <= cons.p_avg * (1 + 1e-12)
    assert bd.avg_interference <= cons.q_avg * (1 + 1e-12)
    assert np.all(out.p_idle >= 0) and np.all(out.p_busy >= 0)
