"""Achievable-rate lower bound, power/interference accounting and the
energy-efficiency objective, plus a Monte Carlo estimator of the exact
mutual information under the Gaussian-mixture disturbance.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .channel import ChannelSampleSet
from .sensing import BranchProbs, SensingSpec

__all__ = [
    "SystemParams",
    "PowerPolicy",
    "EEBreakdown",
    "MCEstimate",
    "DegenerateObjectiveError",
    "disturbance_power",
    "rate_lower_bound",
    "power_accounting",
    "energy_efficiency",
    "exact_rate_mc",
    "exact_rate_mc_fading",
]

LOG2E = float(np.log2(np.e))


class DegenerateObjectiveError(ArithmeticError):
    """Raised when the total consumed power is zero, so EE is undefined."""


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the secondary link.

    ``symbol_rate`` converts bits per channel use into bits per second; it
    defaults to 1 so rates are per-symbol normalized.
    """

    noise_power: float = 0.2
    primary_power: float = 1.0
    frame_len: float = 100.0
    sense_len: float = 10.0
    circuit_power: float = 0.1
    symbol_rate: float = 1.0

    def __post_init__(self):
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        if self.primary_power < 0 or self.circuit_power < 0:
            raise ValueError("primary_power and circuit_power must be nonnegative")
        if not 0 <= self.sense_len < self.frame_len:
            raise ValueError("need 0 <= sense_len < frame_len")
        if not self.symbol_rate > 0:
            raise ValueError("symbol_rate must be positive")

    @property
    def rate_scale(self) -> float:
        """Fraction of the frame left for data, times the symbol rate."""
        return self.symbol_rate * (self.frame_len - self.sense_len) / self.frame_len


class PowerPolicy:
    """Per-realization transmit powers for the idle- and busy-sensed states."""

    def __init__(self, p_idle, p_busy):
        p_idle = np.asarray(p_idle, dtype=float)
        p_busy = np.asarray(p_busy, dtype=float)
        if p_idle.shape != p_busy.shape or p_idle.ndim != 1:
            raise ValueError("p_idle and p_busy must be 1-D arrays of equal length")
        if np.any(p_idle < 0) or np.any(p_busy < 0):
            raise ValueError("transmit powers must be nonnegative")
        self.p_idle = p_idle
        self.p_busy = p_busy

    def __len__(self):
        return self.p_idle.size

    def __repr__(self):
        return (f"PowerPolicy(n={len(self)}, mean_idle={self.p_idle.mean():.4g}, "
                f"mean_busy={self.p_busy.mean():.4g})")

    @classmethod
    def constant(cls, n, p_idle, p_busy=None):
        p_busy = p_idle if p_busy is None else p_busy
        return cls(np.full(n, float(p_idle)), np.full(n, float(p_busy)))

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n))

    def scaled(self, c):
        return PowerPolicy(c * self.p_idle, c * self.p_busy)

    def branch(self, k):
        return self.p_idle if k == 0 else self.p_busy


@dataclass(frozen=True)
class EEBreakdown:
    rate: float
    avg_tx_power: float
    total_power: float
    avg_interference: float
    ee: float


class MCEstimate(NamedTuple):
    value: float
    stderr: float


def disturbance_power(params: SystemParams, probs: BranchProbs, branch: int) -> float:
    """Variance of the Gaussian surrogate for the disturbance in a branch."""
    return params.noise_power + probs.posterior(branch) * params.primary_power


def _check_sizes(samples, policy):
    if len(samples) != len(policy):
        raise ValueError(
            f"policy has {len(policy)} entries but the sample set has {len(samples)}")


def _branch_rates(params, probs, gains_h, p_idle, p_busy):
    out = 0.0
    for k, power in ((0, p_idle), (1, p_busy)):
        weight = probs.decision(k)
        if weight == 0.0:
            continue
        snr = power * gains_h / disturbance_power(params, probs, k)
        out += weight * np.mean(np.log2(1.0 + snr))
    return params.rate_scale * out


def rate_lower_bound(params: SystemParams, probs: BranchProbs,
                     samples: ChannelSampleSet, policy: PowerPolicy) -> float:
    """Rate obtained by treating the mixture disturbance in each decision
    branch as Gaussian with the same variance.

    Returns ``rate_scale * sum_k Pr{decision k} * mean(log2(1 + P_k |h|^2 / D_k))``
    where ``D_k = N0 + Pr(busy | decision k) * sigma_s^2``.
    """
    _check_sizes(samples, policy)
    return float(_branch_rates(params, probs, samples.gains_h,
                               policy.p_idle, policy.p_busy))


def power_accounting(params: SystemParams, probs: BranchProbs, spec: SensingSpec,
                     samples: ChannelSampleSet, policy: PowerPolicy) -> EEBreakdown:
    """Rate, average transmit power, interference at the primary receiver and EE.

    Raises
    ------
    DegenerateObjectiveError
        If circuit power is zero and the policy never transmits.
    """
    _check_sizes(samples, policy)
    pd = spec.p_detect
    avg_tx = float(np.mean(probs.prob_decision_idle * policy.p_idle
                           + probs.prob_decision_busy * policy.p_busy))
    interference = float(np.mean(((1.0 - pd) * policy.p_idle + pd * policy.p_busy)
                                 * samples.gains_g))
    rate = rate_lower_bound(params, probs, samples, policy)
    total = avg_tx + params.circuit_power
    if total <= 0.0:
        raise DegenerateObjectiveError("total power is zero: EE undefined for an all-zero "
                                       "policy without circuit power")
    return EEBreakdown(rate=rate, avg_tx_power=avg_tx, total_power=total,
                       avg_interference=interference, ee=rate / total)


def energy_efficiency(params, probs, spec, samples, policy) -> float:
    return power_accounting(params, probs, spec, samples, policy).ee


def _neg_log_density(r, variances, weights):
    """-log of a circularly-symmetric complex Gaussian mixture density at |y|^2 = r."""
    variances = np.asarray(variances)[:, None]
    log_w = np.log(np.asarray(weights))[:, None]
    comps = log_w - np.log(np.pi * variances) - r[None, :] / variances
    return -logsumexp(comps, axis=0)


def _mixture_draw(rng, variances, weights, n):
    """|y|^2 for y drawn from a complex Gaussian mixture (one or two components)."""
    if len(weights) == 1:
        scale = variances[0]
    else:
        scale = np.where(rng.random(n) < weights[1], variances[1], variances[0])
    return scale * rng.standard_exponential(n)


def _branch_mi(rng, signal_power, noise_var, primary_var, posterior, n):
    comps = [(w, v) for w, v in ((1.0 - posterior, noise_var),
                                 (posterior, noise_var + primary_var)) if w > 0]
    weights = np.array([w for w, _ in comps])
    noise_vars = np.array([v for _, v in comps])
    out_vars = noise_vars + signal_power

    r_y = _mixture_draw(rng, out_vars, weights, n)
    r_n = _mixture_draw(rng, noise_vars, weights, n)
    nll_y = _neg_log_density(r_y, out_vars, weights)
    nll_n = _neg_log_density(r_n, noise_vars, weights)
    value = (nll_y.mean() - nll_n.mean()) / np.log(2.0)
    stderr = np.sqrt(nll_y.var(ddof=1) / n + nll_n.var(ddof=1) / n) / np.log(2.0)
    return value, stderr


def exact_rate_mc(params: SystemParams, probs: BranchProbs, gain_h: float,
                  p_idle: float, p_busy: float, n_mc: int = 2_000_000,
                  seed: int = 42) -> MCEstimate:
    """Monte Carlo estimate of the rate with the true mixture disturbance.

    For each decision branch the mutual information of a complex Gaussian
    input is estimated as h(Y) - h(N), both differential entropies being
    sample averages of the negative log mixture density. Y and N use
    independent draws from the branch's own random stream. Branch values are
    combined exactly like the lower bound (decision-weighted, frame-scaled).

    Parameters
    ----------
    gain_h : float
        Fixed link power gain |h|^2.
    p_idle, p_busy : float
        Transmit powers in the idle- and busy-sensed states.
    n_mc : int
        Draws per entropy estimate, at least 10**4.

    Returns
    -------
    MCEstimate
        ``(value, stderr)`` in the same units as :func:`rate_lower_bound`.
    """
    if n_mc < 10_000:
        raise ValueError("n_mc must be at least 1e4")
    if gain_h < 0 or p_idle < 0 or p_busy < 0:
        raise ValueError("gains and powers must be nonnegative")
    streams = np.random.SeedSequence(int(seed)).spawn(2)
    value = 0.0
    var = 0.0
    for k, power in ((0, p_idle), (1, p_busy)):
        weight = probs.decision(k)
        signal = power * gain_h
        if weight == 0.0 or signal == 0.0:
            continue
        mi, se = _branch_mi(np.random.default_rng(streams[k]), signal,
                            params.noise_power, params.primary_power,
                            probs.posterior(k), int(n_mc))
        value += weight * mi
        var += (weight * se) ** 2
    scale = params.rate_scale
    return MCEstimate(scale * value, scale * np.sqrt(var))


def exact_rate_mc_fading(params: SystemParams, probs: BranchProbs,
                         samples: ChannelSampleSet, policy: PowerPolicy,
                         n_mc: int = 10_000, seed: int = 42) -> MCEstimate:
    """Fading average of :func:`exact_rate_mc` over a sample set.

    Each realization gets its own child seed; cost is ``len(samples) * n_mc``.
    """
    _check_sizes(samples, policy)
    seeds = np.random.SeedSequence(int(seed)).generate_state(len(samples), dtype=np.uint64)
    values = np.empty(len(samples))
    errs = np.empty(len(samples))
    for i, (h2, p0, p1) in enumerate(zip(samples.gains_h, policy.p_idle, policy.p_busy)):
        values[i], errs[i] = exact_rate_mc(params, probs, h2, p0, p1, n_mc, int(seeds[i]))
    n = len(samples)
    return MCEstimate(float(values.mean()), float(np.sqrt(np.sum(errs ** 2)) / n))
