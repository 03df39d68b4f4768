"""Brute-force and closed-form-free references used to validate the solver.

Nothing here calls into :mod:`sensing_ee.optimizer`; the power formulas used
for checking are re-derived locally (three-branch threshold form, raw
stationarity expression) so the oracles stay independent of the code they
check.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .channel import ChannelSampleSet
from .power import BUSY, IDLE, Constraints, DualState, Regime, interference_weight
from .rate import LOG2E, EEBreakdown, PowerPolicy, SystemParams, disturbance_power, \
    power_accounting
from .sensing import BranchProbs, SensingSpec, branch_probs

__all__ = [
    "GridSpec",
    "ConstantOptimum",
    "best_constant_policy",
    "stationarity_residual",
    "lagrangian_integrand",
    "threshold_power_peak",
    "best_adaptive_policy",
    "project_feasible",
]


@dataclass(frozen=True)
class GridSpec:
    p_min: float = 1e-3
    p_max: float = 10.0
    n_points: int = 200
    spacing: str = "geometric"

    def __post_init__(self):
        if self.p_min < 0 or not self.p_max > self.p_min or self.n_points < 2:
            raise ValueError("need 0 <= p_min < p_max and n_points >= 2")
        if self.spacing not in ("linear", "geometric"):
            raise ValueError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "geometric" and self.p_min == 0:
            raise ValueError("geometric spacing needs p_min > 0")

    def points(self):
        if self.spacing == "linear":
            return np.linspace(self.p_min, self.p_max, self.n_points)
        return np.geomspace(self.p_min, self.p_max, self.n_points)

    def refined(self):
        """Grid with every interval halved; contains all current points."""
        return GridSpec(self.p_min, self.p_max, 2 * self.n_points - 1, self.spacing)


class ConstantOptimum(NamedTuple):
    p_idle: float
    p_busy: float
    breakdown: EEBreakdown


def best_constant_policy(params: SystemParams, spec: SensingSpec, cons: Constraints,
                         samples: ChannelSampleSet, grid: GridSpec = GridSpec()) -> ConstantOptimum:
    """Exhaustive search over non-adaptive policies ``(P0, P1)``.

    Each axis is ``{0} U grid.points()``. Infeasible pairs are discarded and
    ties go to the lowest grid index. Returns the zero policy when nothing
    else is feasible.
    """
    probs = branch_probs(spec)
    axis = np.unique(np.concatenate([[0.0], grid.points()]))
    h = samples.gains_h
    rates = []
    for k in (IDLE, BUSY):
        snr = axis[:, None] * h[None, :] / disturbance_power(params, probs, k)
        rates.append(params.rate_scale * probs.decision(k) * np.log2(1.0 + snr).mean(axis=1))
    rate = rates[0][:, None] + rates[1][None, :]
    p0, p1 = axis[:, None], axis[None, :]
    tx = probs.prob_decision_idle * p0 + probs.prob_decision_busy * p1
    leak = ((1 - spec.p_detect) * p0 + spec.p_detect * p1) * float(np.mean(samples.gains_g))

    feasible = leak <= cons.q_avg
    if cons.regime is Regime.AVG:
        feasible &= tx <= cons.p_avg
    else:
        feasible &= (p0 <= cons.p_peak_idle) & (p1 <= cons.p_peak_busy)
    total = tx + params.circuit_power
    with np.errstate(divide="ignore", invalid="ignore"):
        ee = np.where(total > 0, rate / total, 0.0)
    ee = np.where(feasible, ee, -np.inf)
    i, j = np.unravel_index(int(np.argmax(ee)), ee.shape)
    if not np.isfinite(ee[i, j]):
        i = j = 0
    policy = PowerPolicy.constant(len(samples), axis[i], axis[j])
    if params.circuit_power == 0 and axis[i] == axis[j] == 0:
        bd = EEBreakdown(0.0, 0.0, 0.0, 0.0, 0.0)
    else:
        bd = power_accounting(params, probs, spec, samples, policy)
    return ConstantOptimum(float(axis[i]), float(axis[j]), bd)


def stationarity_residual(branch, params: SystemParams, spec: SensingSpec,
                          probs: BranchProbs, gain_h, gain_g, duals: DualState, power):
    """Derivative of the per-realization Lagrangian w.r.t. the branch power.

    Zero at an interior optimum, nonpositive where the optimum sits at 0.
    """
    weight = probs.decision(branch)
    marginal_rate = (params.rate_scale * weight * gain_h * LOG2E
                     / (disturbance_power(params, probs, branch) + power * gain_h))
    price = ((duals.lam + duals.alpha) * weight
             + duals.nu * gain_g * interference_weight(spec, branch))
    return marginal_rate - price


def lagrangian_integrand(branch, params, spec, probs, gain_h, gain_g, duals, power):
    """Per-realization Lagrangian contribution of one branch at ``power``."""
    weight = probs.decision(branch)
    rate = params.rate_scale * weight * np.log2(
        1.0 + power * gain_h / disturbance_power(params, probs, branch))
    price = ((duals.lam + duals.alpha) * weight
             + duals.nu * gain_g * interference_weight(spec, branch))
    return rate - price * power


def threshold_power_peak(branch, params, spec, probs, gain_h, gain_g, duals, cons):
    """Peak-regime power written as three cases in the interference gain:
    off above an upper threshold, at the peak below a lower one, water-filling
    in between. Thresholds are compared in product form so that a zero
    interference price needs no special case.
    """
    weight = probs.decision(branch)
    if weight == 0.0:
        return 0.0
    c = params.rate_scale * weight * LOG2E
    d = disturbance_power(params, probs, branch)
    peak = cons.peak_limit(branch)
    interference_price = duals.nu * interference_weight(spec, branch) * gain_g
    if gain_h <= 0:
        return 0.0
    if interference_price >= c * gain_h / d - duals.alpha * weight:
        return 0.0
    if interference_price <= c * gain_h / (peak * gain_h + d) - duals.alpha * weight:
        return float(peak)
    return c / (interference_price + duals.alpha * weight) - d / gain_h


def project_feasible(params, spec, cons: Constraints, samples, policy) -> PowerPolicy:
    """Clip to the peak limits, then scale down until both average
    constraints hold."""
    probs = branch_probs(spec)
    p0, p1 = policy.p_idle, policy.p_busy
    if cons.regime is Regime.PEAK:
        p0 = np.minimum(p0, cons.p_peak_idle)
        p1 = np.minimum(p1, cons.p_peak_busy)
    p0, p1 = np.maximum(p0, 0.0), np.maximum(p1, 0.0)
    tx = float(np.mean(probs.prob_decision_idle * p0 + probs.prob_decision_busy * p1))
    leak = float(np.mean(((1 - spec.p_detect) * p0 + spec.p_detect * p1) * samples.gains_g))
    scale = 1.0
    if leak > cons.q_avg:
        scale = min(scale, cons.q_avg / leak)
    if cons.regime is Regime.AVG and tx > cons.p_avg:
        scale = min(scale, cons.p_avg / tx)
    return PowerPolicy(scale * p0, scale * p1)


def best_adaptive_policy(params: SystemParams, spec: SensingSpec, cons: Constraints,
                         samples: ChannelSampleSet, n_starts: int = 4, seed: int = 0):
    """Maximize the EE ratio directly over all per-realization powers.

    A general-purpose SQP solve of ``R / P_tot`` (a pseudo-concave ratio, so
    any KKT point is global) with explicit linear constraints and bounds,
    restarted from several feasible points; the winner is projected onto the
    feasible set. Intended for small sample sets (the problem has
    ``2 * len(samples)`` variables).

    Returns
    -------
    (PowerPolicy, EEBreakdown)
    """
    probs = branch_probs(spec)
    n = len(samples)
    h, g = samples.gains_h, samples.gains_g
    w = np.array([probs.prob_decision_idle, probs.prob_decision_busy])
    d = np.array([disturbance_power(params, probs, k) for k in (IDLE, BUSY)])
    leak_w = np.array([1 - spec.p_detect, spec.p_detect])
    c = params.rate_scale

    def unpack(x):
        return x[:n], x[n:]

    def neg_ee(x):
        p0, p1 = unpack(x)
        rate = c * (w[0] * np.log2(1 + p0 * h / d[0]).mean()
                    + w[1] * np.log2(1 + p1 * h / d[1]).mean())
        total = (w[0] * p0 + w[1] * p1).mean() + params.circuit_power
        d_rate = np.concatenate([c * w[0] * LOG2E * h / (d[0] + p0 * h),
                                 c * w[1] * LOG2E * h / (d[1] + p1 * h)]) / n
        d_total = np.concatenate([np.full(n, w[0]), np.full(n, w[1])]) / n
        return -rate / total, -(d_rate * total - rate * d_total) / total ** 2

    leak_row = np.concatenate([leak_w[0] * g, leak_w[1] * g]) / n
    constraints = [{"type": "ineq", "fun": lambda x: cons.q_avg - leak_row @ x,
                    "jac": lambda x: -leak_row}]
    if cons.regime is Regime.AVG:
        tx_row = np.concatenate([np.full(n, w[0]), np.full(n, w[1])]) / n
        constraints.append({"type": "ineq", "fun": lambda x: cons.p_avg - tx_row @ x,
                            "jac": lambda x: -tx_row})
        upper = [cons.p_avg * n / max(w[k], 1e-300) for k in (IDLE, BUSY)]
    else:
        upper = [cons.p_peak_idle, cons.p_peak_busy]
    bounds = [(0.0, upper[0])] * n + [(0.0, upper[1])] * n

    rng = np.random.default_rng(seed)
    best = None
    for s in range(n_starts):
        x0 = np.full(2 * n, 1e-2) if s == 0 else rng.uniform(0, 1, 2 * n)
        x0 = np.concatenate(unpack(x0))
        start = project_feasible(params, spec, cons, samples, PowerPolicy(*unpack(x0)))
        x0 = np.concatenate([start.p_idle, start.p_busy])
        res = minimize(neg_ee, x0, jac=True, method="SLSQP", bounds=bounds,
                       constraints=constraints, options={"maxiter": 2000, "ftol": 1e-14})
        x = np.clip(res.x, 0.0, None)
        policy = project_feasible(params, spec, cons, samples, PowerPolicy(*unpack(x)))
        bd = power_accounting(params, probs, spec, samples, policy)
        if best is None or bd.ee > best[1].ee:
            best = (policy, bd)
    return best
