"""Dinkelbach iteration for the energy-efficiency ratio, with the constraint
multipliers found by projected subgradient steps on the dual.
"""

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .channel import ChannelSampleSet, FadingConfig, draw_samples
from .power import (BUSY, IDLE, Constraints, DualState, Regime, interference_weight,
                    policy_for_duals)
from .rate import LOG2E, EEBreakdown, PowerPolicy, SystemParams, power_accounting, \
    rate_lower_bound
from .sensing import BranchProbs, SensingSpec, branch_probs

__all__ = [
    "SolverConfig",
    "InnerResult",
    "TraceRecord",
    "SolveResult",
    "dinkelbach_F",
    "solve_inner",
    "solve",
    "write_trace_csv",
    "TRACE_COLUMNS",
]

log = logging.getLogger(__name__)

STEP_RULES = ("scaled", "constant", "diminishing")
_MAX_SCALE = 10.0

TRACE_COLUMNS = ("outer_iter", "alpha", "F_alpha", "lambda", "nu", "rate",
                 "avg_tx_power", "avg_interference", "inner_iters")


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls.

    ``step_rule`` selects the multiplier step:

    ``"scaled"``
        ``t / curvature``, where ``curvature`` is the exact second derivative
        of the dual function along that multiplier; a single step changes a
        positive multiplier by at most a factor of ten.
    ``"constant"``
        plain step ``t``.
    ``"diminishing"``
        ``t / sqrt(k)`` at inner step ``k``.

    ``inner_tolerance`` bounds the complementary-slackness products and the
    relative constraint violation at which the multiplier search stops;
    it defaults to ``tolerance / 10`` so inner inexactness cannot flip the
    sign of the outer test quantity.
    """

    tolerance: float = 1e-4
    step_size: float = 0.1
    max_outer_iters: int = 50
    max_inner_iters: int = 5000
    alpha_init: float = 0.0
    lambda_init: float = 0.0
    nu_init: float = 0.0
    step_rule: str = "scaled"
    inner_tolerance: Optional[float] = None

    def __post_init__(self):
        if not (self.tolerance > 0 and self.step_size > 0):
            raise ValueError("tolerance and step_size must be positive")
        if self.max_outer_iters < 1 or self.max_inner_iters < 1:
            raise ValueError("iteration caps must be at least 1")
        if min(self.alpha_init, self.lambda_init, self.nu_init) < 0:
            raise ValueError("initial alpha and multipliers must be nonnegative")
        if self.inner_tolerance is not None and not self.inner_tolerance > 0:
            raise ValueError("inner_tolerance must be positive")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"unknown step_rule {self.step_rule!r}")

    @property
    def inner_eps(self) -> float:
        return self.tolerance / 10 if self.inner_tolerance is None else self.inner_tolerance


@dataclass
class InnerResult:
    policy: PowerPolicy
    duals: DualState
    iterations: int
    converged: bool
    tx_slack: float
    interference_slack: float


@dataclass(frozen=True)
class TraceRecord:
    outer_iter: int
    alpha: float
    F_alpha: float
    lam: float
    nu: float
    rate: float
    avg_tx_power: float
    avg_interference: float
    inner_iters: int
    tx_slack: float
    interference_slack: float


@dataclass
class SolveResult:
    ee_opt: float
    duals: DualState
    policy: PowerPolicy
    breakdown: EEBreakdown
    trace: List[TraceRecord] = field(default_factory=list)
    converged: bool = False
    degenerate: bool = False

    @property
    def outer_iters(self):
        return len(self.trace)

    @property
    def mean_p_idle(self):
        return float(np.mean(self.policy.p_idle))

    @property
    def mean_p_busy(self):
        return float(np.mean(self.policy.p_busy))


def dinkelbach_F(alpha, params, spec, probs, samples, policy) -> float:
    """Parametric objective ``R - alpha * P_tot`` at the given policy."""
    bd = power_accounting(params, probs, spec, samples, policy)
    return bd.rate - alpha * bd.total_power


def _usage(spec, probs, samples, policy):
    tx = float(np.mean(probs.prob_decision_idle * policy.p_idle
                       + probs.prob_decision_busy * policy.p_busy))
    leak = float(np.mean((interference_weight(spec, IDLE) * policy.p_idle
                          + interference_weight(spec, BUSY) * policy.p_busy)
                         * samples.gains_g))
    return tx, leak


def _dual_curvature(params, spec, probs, samples, policy, duals, cons):
    """Second derivatives of the dual function along lambda and nu.

    Only realizations whose power sits strictly inside its bounds move with
    the prices; there ``dP/dprice = -rate_scale * Pr{k} * log2(e) / price^2``.
    """
    g = samples.gains_g
    curv_lam = np.zeros(len(samples))
    curv_nu = np.zeros(len(samples))
    for k in (IDLE, BUSY):
        weight = probs.decision(k)
        if weight == 0.0:
            continue
        power = policy.branch(k)
        inside = power > 0
        if cons.regime is Regime.PEAK:
            inside &= power < cons.peak_limit(k)
        leak = interference_weight(spec, k) * g
        price = (duals.lam + duals.alpha) * weight + duals.nu * leak
        with np.errstate(divide="ignore", invalid="ignore"):
            sens = np.where(inside, params.rate_scale * weight * LOG2E / price ** 2, 0.0)
        curv_lam += weight ** 2 * sens
        curv_nu += leak ** 2 * sens
    return float(np.mean(curv_lam)), float(np.mean(curv_nu))


def _scaled_update(m, slack, curvature, t, floor_zero=True):
    """Projected step ``m - t * slack / curvature``, limited to a factor of
    ``_MAX_SCALE`` change when ``m > 0``. Without curvature (no realization
    reacts to the price) an over-budget multiplier grows by ``_MAX_SCALE``."""
    if curvature > 0 and np.isfinite(curvature):
        proposal = m - t * slack / curvature
    elif slack > 0:
        proposal = 0.0
    else:
        proposal = m * _MAX_SCALE if m > 0 else max(-t * slack, 1e-6)
    if m > 0:
        proposal = min(max(proposal, m / _MAX_SCALE), m * _MAX_SCALE)
        if floor_zero and proposal <= 1e-12 and slack > 0:
            proposal = 0.0
    return max(proposal, 0.0)


class _Bracket:
    """Interval known to contain a 1-D multiplier's root: usage decreases in
    the multiplier, so over-budget points are lower bounds and under-budget
    points upper bounds. Steps leaving the interval are replaced by bisection."""

    def __init__(self):
        self.lo, self.hi = 0.0, math.inf

    def update(self, m, slack):
        if slack < 0:
            self.lo = max(self.lo, m)
        elif slack > 0:
            self.hi = min(self.hi, m)

    def guard(self, proposal):
        if self.lo < proposal < self.hi or not math.isfinite(self.hi):
            return proposal
        if self.lo > 0:
            return math.sqrt(self.lo * self.hi)
        return 0.5 * self.hi


def _silenced_branches(spec, probs, cons):
    """States that must stay off: zero-probability decisions, and states that
    leak interference when the interference budget is zero."""
    off = []
    for k in (IDLE, BUSY):
        leaks = interference_weight(spec, k) > 0
        off.append(probs.decision(k) == 0.0 or (cons.q_avg == 0.0 and leaks))
    return tuple(off)


def _bootstrap_lambda(params, probs, samples, cons):
    # multiplier of a single link at the mean gain that spends exactly p_avg
    d_mean = min(params.noise_power + probs.posterior(k) * params.primary_power
                 for k in (IDLE, BUSY))
    h_mean = float(np.mean(samples.gains_h))
    return params.rate_scale * LOG2E / (cons.p_avg + d_mean / h_mean)


def solve_inner(alpha, cons: Constraints, params: SystemParams, spec: SensingSpec,
                probs: BranchProbs, samples: ChannelSampleSet,
                duals: Optional[DualState] = None,
                cfg: SolverConfig = SolverConfig()) -> InnerResult:
    """Find the multipliers for a fixed Dinkelbach parameter ``alpha``.

    Each step recomputes the closed-form policy at the current multipliers and
    moves every active multiplier against its constraint slack,
    ``m <- [m - t * (limit - achieved)]^+``. In the peak regime only the
    interference multiplier moves. Iteration stops once both complementary
    slackness products are at most ``cfg.inner_eps`` and both constraints hold
    to within ``cfg.inner_eps`` relative to their limits.

    The multiplier of the average transmit constraint is the only price on
    power when ``alpha == 0`` and the interference price vanishes, so in that
    case it is kept strictly positive: a step that would project it to zero
    halves it instead.
    """
    eps = cfg.inner_eps
    avg_regime = cons.regime is Regime.AVG
    off = _silenced_branches(spec, probs, cons)
    if duals is None:
        duals = DualState(alpha, cfg.lambda_init, cfg.nu_init)
    lam = duals.lam if avg_regime else 0.0
    nu = duals.nu
    keep_lam_positive = avg_regime and alpha == 0.0
    if keep_lam_positive and lam == 0.0:
        lam = _bootstrap_lambda(params, probs, samples, cons)

    # only nu moves in the peak regime, so a 1-D bracket stays valid
    bracket = _Bracket() if not avg_regime else None
    best = None
    for it in range(1, cfg.max_inner_iters + 1):
        current = DualState(alpha, lam, nu)
        policy = policy_for_duals(params, spec, probs, samples, current, cons)
        if any(off):
            policy = PowerPolicy(*(np.zeros(len(samples)) if off[k] else policy.branch(k)
                                   for k in (IDLE, BUSY)))
        tx, leak = _usage(spec, probs, samples, policy)
        tx_slack = cons.p_avg - tx if avg_regime else 0.0
        q_slack = cons.q_avg - leak

        violation = max(-tx_slack / cons.p_avg if avg_regime else 0.0,
                        -q_slack / cons.q_avg if cons.q_avg > 0 else -q_slack, 0.0)
        gap = max(abs(lam * tx_slack), abs(nu * q_slack))
        score = max(gap, violation)
        if best is None or score < best[0]:
            best = (score, policy, current, tx_slack, q_slack)
        if gap <= eps and violation <= eps:
            return InnerResult(policy, current, it, True, tx_slack, q_slack)

        if cfg.step_rule == "scaled":
            curv_lam, curv_nu = _dual_curvature(params, spec, probs, samples, policy,
                                                current, cons)
            if avg_regime:
                lam = _scaled_update(lam, tx_slack, curv_lam, cfg.step_size,
                                     floor_zero=not keep_lam_positive)
            new_nu = _scaled_update(nu, q_slack, curv_nu, cfg.step_size)
            if bracket is not None and cons.q_avg > 0:
                bracket.update(nu, q_slack)
                new_nu = bracket.guard(new_nu) if new_nu > 0 else new_nu
            nu = new_nu
            continue
        step = cfg.step_size if cfg.step_rule == "constant" else cfg.step_size / math.sqrt(it)
        if avg_regime:
            new_lam = lam - step * tx_slack
            lam = max(new_lam, 0.5 * lam) if keep_lam_positive else max(new_lam, 0.0)
        nu = max(nu - step * q_slack, 0.0)

    _, policy, current, tx_slack, q_slack = best
    log.debug("inner loop hit %d iterations at alpha=%g", cfg.max_inner_iters, alpha)
    return InnerResult(policy, current, cfg.max_inner_iters, False, tx_slack, q_slack)


def _zero_result(params, spec, probs, samples):
    policy = PowerPolicy.zeros(len(samples))
    total = params.circuit_power
    bd = EEBreakdown(rate=0.0, avg_tx_power=0.0, total_power=total,
                     avg_interference=0.0, ee=0.0)
    return SolveResult(ee_opt=0.0, duals=DualState(), policy=policy, breakdown=bd,
                       trace=[], converged=True, degenerate=True)


def solve(params: SystemParams, spec: SensingSpec, cons: Constraints,
          fading_cfg: FadingConfig = FadingConfig(), solver_cfg: SolverConfig = SolverConfig(),
          samples: Optional[ChannelSampleSet] = None) -> SolveResult:
    """Maximize rate / (average transmit power + circuit power).

    One sample set (drawn from ``fading_cfg`` unless ``samples`` is given) is
    reused for every iteration. The Dinkelbach parameter is updated as the EE
    of the current inner solution until ``|F(alpha)| <= tolerance``;
    multipliers are warm-started from one outer iteration to the next.

    Configurations that only admit the all-zero policy return a result with
    ``ee_opt == 0`` and ``degenerate=True`` instead of raising.
    """
    if samples is None:
        samples = draw_samples(fading_cfg)
    probs = branch_probs(spec)
    cfg = solver_cfg
    if all(_silenced_branches(spec, probs, cons)):
        return _zero_result(params, spec, probs, samples)

    alpha = cfg.alpha_init
    duals = DualState(alpha, cfg.lambda_init, cfg.nu_init)
    trace = []
    converged = False
    inner = None
    for n in range(cfg.max_outer_iters):
        inner = solve_inner(alpha, cons, params, spec, probs, samples,
                            replace(duals, alpha=alpha), cfg)
        duals = inner.duals
        bd = power_accounting(params, probs, spec, samples, inner.policy)
        F = bd.rate - alpha * bd.total_power
        trace.append(TraceRecord(n, alpha, F, duals.lam, duals.nu, bd.rate, bd.avg_tx_power,
                                 bd.avg_interference, inner.iterations, inner.tx_slack,
                                 inner.interference_slack))
        log.debug("outer %d: alpha=%.6g F=%.3g inner=%d", n, alpha, F, inner.iterations)
        if abs(F) <= cfg.tolerance and inner.converged:
            converged = True
            break
        if bd.rate == 0.0:
            # nothing worth transmitting at any price: EE is zero
            break
        alpha = bd.rate / bd.total_power

    bd = power_accounting(params, probs, spec, samples, inner.policy)
    return SolveResult(ee_opt=bd.ee, duals=inner.duals, policy=inner.policy, breakdown=bd,
                       trace=trace, converged=converged, degenerate=bd.rate == 0.0)


def write_trace_csv(result: SolveResult, path_or_file) -> None:
    """Write the outer-iteration trace with the fixed column set."""
    def _write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in result.trace:
            writer.writerow([r.outer_iter] + [repr(float(v)) for v in (
                r.alpha, r.F_alpha, r.lam, r.nu, r.rate, r.avg_tx_power,
                r.avg_interference)] + [r.inner_iters])
    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)
