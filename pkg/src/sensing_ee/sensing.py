"""Sensing quality and the decision-branch probabilities derived from it."""

from dataclasses import dataclass

__all__ = ["SensingSpec", "BranchProbs", "branch_probs"]

_PROB_TOL = 1e-12


def _check_prob(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class SensingSpec:
    """Detector operating point plus primary-user activity priors.

    Parameters
    ----------
    p_detect : float
        Probability of declaring the channel busy when the primary is active.
    p_false_alarm : float
        Probability of declaring the channel busy when the primary is idle.
    prior_idle, prior_busy : float
        Prior probabilities of primary inactivity / activity.
    """

    p_detect: float = 0.8
    p_false_alarm: float = 0.1
    prior_idle: float = 0.4
    prior_busy: float = 0.6

    def __post_init__(self):
        _check_prob("p_detect", self.p_detect)
        _check_prob("p_false_alarm", self.p_false_alarm)
        _check_prob("prior_idle", self.prior_idle)
        _check_prob("prior_busy", self.prior_busy)
        if abs(self.prior_idle + self.prior_busy - 1.0) > _PROB_TOL:
            raise ValueError("prior_idle + prior_busy must equal 1")

    @property
    def perfect(self) -> bool:
        return self.p_detect == 1.0 and self.p_false_alarm == 0.0


@dataclass(frozen=True)
class BranchProbs:
    """Probabilities of each sensing decision and the posterior of primary
    activity conditioned on that decision.

    ``degenerate_idle`` / ``degenerate_busy`` flag a decision that occurs with
    probability zero; its posterior is then set to 0 by convention.
    """

    prob_decision_idle: float
    prob_decision_busy: float
    posterior_busy_given_idle: float
    posterior_busy_given_busy: float
    degenerate_idle: bool = False
    degenerate_busy: bool = False

    def decision(self, branch: int) -> float:
        return self.prob_decision_idle if branch == 0 else self.prob_decision_busy

    def posterior(self, branch: int) -> float:
        return (self.posterior_busy_given_idle if branch == 0
                else self.posterior_busy_given_busy)


def branch_probs(spec: SensingSpec) -> BranchProbs:
    """Decision probabilities and Bayes posteriors for a sensing spec.

    Examples
    --------
    >>> bp = branch_probs(SensingSpec(0.8, 0.1, 0.4, 0.6))
    >>> round(bp.prob_decision_busy, 12), round(bp.posterior_busy_given_idle, 12)
    (0.52, 0.25)
    """
    pd, pf = spec.p_detect, spec.p_false_alarm
    q0, q1 = spec.prior_idle, spec.prior_busy

    busy_and_detected = q1 * pd
    busy_and_missed = q1 * (1.0 - pd)
    prob_busy = q0 * pf + busy_and_detected
    prob_idle = q0 * (1.0 - pf) + busy_and_missed

    degenerate_idle = prob_idle <= 0.0
    degenerate_busy = prob_busy <= 0.0
    post_idle = 0.0 if degenerate_idle else busy_and_missed / prob_idle
    post_busy = 0.0 if degenerate_busy else busy_and_detected / prob_busy

    return BranchProbs(
        prob_decision_idle=prob_idle,
        prob_decision_busy=prob_busy,
        posterior_busy_given_idle=min(post_idle, 1.0),
        posterior_busy_given_busy=min(post_busy, 1.0),
        degenerate_idle=degenerate_idle,
        degenerate_busy=degenerate_busy,
    )
