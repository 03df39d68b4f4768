"""Closed-form per-realization powers from the KKT stationarity conditions."""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import ChannelSampleSet
from .rate import LOG2E, PowerPolicy, SystemParams, disturbance_power
from .sensing import BranchProbs, SensingSpec

__all__ = [
    "IDLE",
    "BUSY",
    "Regime",
    "DualState",
    "Constraints",
    "UnboundedPowerError",
    "interference_weight",
    "effective_price",
    "optimal_power_avg",
    "optimal_power_peak",
    "policy_for_duals",
]

IDLE = 0
BUSY = 1


class UnboundedPowerError(ArithmeticError):
    """The Lagrangian has no finite maximizer: every price on a branch is zero."""


class Regime(str, enum.Enum):
    AVG = "avg"    # average transmit power + average interference
    PEAK = "peak"  # per-state peak transmit power + average interference


@dataclass(frozen=True)
class DualState:
    alpha: float = 0.0
    lam: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if min(self.alpha, self.lam, self.nu) < 0:
            raise ValueError(f"dual variables must be nonnegative: {self}")


@dataclass(frozen=True)
class Constraints:
    """Transmit and interference limits (linear power units).

    Use :meth:`average` or :meth:`peak` rather than filling fields by hand.
    ``q_avg = 0`` is accepted; the solver then switches off every state that
    leaks interference.
    """

    q_avg: float
    p_avg: Optional[float] = None
    p_peak_idle: Optional[float] = None
    p_peak_busy: Optional[float] = None
    regime: Regime = Regime.AVG

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if self.q_avg < 0:
            raise ValueError("q_avg must be nonnegative")
        peaks = (self.p_peak_idle, self.p_peak_busy)
        if self.regime is Regime.AVG:
            if self.p_avg is None or any(p is not None for p in peaks):
                raise ValueError("average regime needs p_avg and no peak limits")
            if not self.p_avg > 0:
                raise ValueError("p_avg must be positive")
        else:
            if self.p_avg is not None or any(p is None for p in peaks):
                raise ValueError("peak regime needs both peak limits and no p_avg")
            if not min(peaks) > 0:
                raise ValueError("peak limits must be positive")

    @classmethod
    def average(cls, p_avg, q_avg):
        return cls(q_avg=q_avg, p_avg=p_avg, regime=Regime.AVG)

    @classmethod
    def peak(cls, p_peak_idle, q_avg, p_peak_busy=None):
        p_peak_busy = p_peak_idle if p_peak_busy is None else p_peak_busy
        return cls(q_avg=q_avg, p_peak_idle=p_peak_idle, p_peak_busy=p_peak_busy,
                   regime=Regime.PEAK)

    def peak_limit(self, branch):
        return self.p_peak_idle if branch == IDLE else self.p_peak_busy

    @property
    def transmit_limit(self):
        """The transmit-side limit (p_avg, or the idle-state peak)."""
        return self.p_avg if self.regime is Regime.AVG else self.p_peak_idle


def interference_weight(spec: SensingSpec, branch: int) -> float:
    """Probability that transmission in ``branch`` hits an active primary."""
    return 1.0 - spec.p_detect if branch == IDLE else spec.p_detect


def effective_price(branch, spec, probs, gain_g, duals: DualState):
    """Marginal cost of power in a branch: (lam + alpha) Pr{decision} + nu |g|^2 w."""
    return ((duals.lam + duals.alpha) * probs.decision(branch)
            + duals.nu * np.asarray(gain_g, dtype=float) * interference_weight(spec, branch))


def _stationary_root(branch, params, spec, probs, gain_h, gain_g, duals, zero_price):
    """Unclamped root of the stationarity condition; ``zero_price`` is the value
    used where the price vanishes (``None`` raises)."""
    gain_h = np.asarray(gain_h, dtype=float)
    weight = probs.decision(branch)
    price = np.broadcast_to(effective_price(branch, spec, probs, gain_g, duals),
                            np.broadcast(gain_h, gain_g).shape)
    if weight == 0.0:
        return np.zeros(price.shape)
    free = (price == 0.0) & (gain_h > 0)
    if np.any(free) and zero_price is None:
        raise UnboundedPowerError(
            f"zero price on the {'idle' if branch == IDLE else 'busy'} branch: "
            "alpha, lambda and the interference price are all zero")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        level = params.rate_scale * weight * LOG2E / price
        floor = disturbance_power(params, probs, branch) / gain_h
        root = level - floor
    root = np.where(gain_h > 0, root, -np.inf)
    if np.any(free):
        root = np.where(free, zero_price, root)
    return root


def optimal_power_avg(branch, params: SystemParams, spec: SensingSpec, probs: BranchProbs,
                      gain_h, gain_g, duals: DualState):
    """Water-filling power that zeroes the stationarity condition, clamped at 0.

    ``[rate_scale * Pr{k} * log2(e) / price_k - D_k / |h|^2]^+`` with
    ``price_k`` from :func:`effective_price`. Works elementwise on arrays.

    Raises
    ------
    UnboundedPowerError
        If the price is zero at a realization with positive link gain.
    """
    root = _stationary_root(branch, params, spec, probs, gain_h, gain_g, duals, None)
    out = np.maximum(root, 0.0)
    return float(out) if out.ndim == 0 else out


def optimal_power_peak(branch, params: SystemParams, spec: SensingSpec, probs: BranchProbs,
                       gain_h, gain_g, duals: DualState, cons: Constraints):
    """Power under a per-state peak limit: the lambda-free root clipped to
    ``[0, peak]``. A zero price yields the peak itself."""
    if cons.regime is not Regime.PEAK:
        raise ValueError("optimal_power_peak needs peak-regime constraints")
    peak = cons.peak_limit(branch)
    free_duals = DualState(alpha=duals.alpha, lam=0.0, nu=duals.nu)
    root = _stationary_root(branch, params, spec, probs, gain_h, gain_g, free_duals, np.inf)
    out = np.clip(root, 0.0, peak)
    return float(out) if out.ndim == 0 else out


def policy_for_duals(params: SystemParams, spec: SensingSpec, probs: BranchProbs,
                     samples: ChannelSampleSet, duals: DualState,
                     cons: Constraints) -> PowerPolicy:
    """Lagrangian-maximizing policy over a whole sample set."""
    h, g = samples.gains_h, samples.gains_g
    if cons.regime is Regime.AVG:
        powers = [optimal_power_avg(k, params, spec, probs, h, g, duals) for k in (IDLE, BUSY)]
    else:
        powers = [optimal_power_peak(k, params, spec, probs, h, g, duals, cons)
                  for k in (IDLE, BUSY)]
    return PowerPolicy(*powers)
