"""Energy-efficient power adaptation for sensing-based spectrum sharing
cognitive radio links with imperfect spectrum sensing."""

from .channel import ChannelSampleSet, FadingConfig, draw_samples, expectation, \
    load_samples, save_samples
from .experiments import ExperimentConfig, run_solve, run_sweep, run_validate_bound
from .optimizer import SolverConfig, SolveResult, dinkelbach_F, solve, solve_inner
from .power import Constraints, DualState, Regime, optimal_power_avg, optimal_power_peak, \
    policy_for_duals
from .rate import EEBreakdown, PowerPolicy, SystemParams, exact_rate_mc, power_accounting, \
    rate_lower_bound
from .sensing import BranchProbs, SensingSpec, branch_probs

__version__ = "0.1.0"
