"""Budget-constrained combinatorial bandits for choosing sets of LLMs."""
from ._validation import ConfigError, NotFittedError
from .baselines import (
    C2MABV,
    CUCB,
    BasePolicy,
    C2MABVDirect,
    EpsilonGreedy,
    FixedPolicy,
    ThompsonSampling,
    cucb_select,
    epsilon_greedy_select,
    fixed_select,
    make_policy,
    thompson_select,
)
from .config import ExperimentConfig, build_environment, load_config
from .core import ProblemInstance, RewardModel, action_reward, is_feasible, relaxed_reward
from .env import ArmSpec, Environment, RewardDist, RoundOutcome, execute_action, make_synthetic_instance
from .learner import EstimatorState, FeedbackBatch, confidence_radius, cost_lcb, reward_ucb, update
from .metrics import RoundRecord, RunSummary, ratio, regret, theorem_bounds, violation
from .oracle import SizeGuardError, best_action, best_budgeted_action, direct_policy_select
from .relax import RelaxedProblem, SolveReport, solve_awc, solve_aic, solve_suc, solve_two_row_lp
from .rounding import decompose, dependent_round, swap_round
from .runner import replay, run_experiment, run_round, simulate

__version__ = "0.1.0"
