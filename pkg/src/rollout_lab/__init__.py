"""Staged-rollout policy simulation, online learning, and evaluation."""

__version__ = "0.1.0"

from .agents import (
    DEFAULT_SOJOURN_BUCKETS,
    Hyperparams,
    PolicyVector,
    QTable,
    enumerate_naive,
    q_update,
    run_policy_episode,
    run_threshold_episode,
    run_ucb_episode,
    state_key,
    ucb_select,
)
from .pareto import (
    OutcomePoint,
    ParetoFront,
    average_suboptimality,
    interpolate_naive,
    pareto_front,
    range_metric,
    suboptimality,
)
from .simulator import (
    ADVANCE,
    DEV,
    STAY,
    EnvState,
    EpisodeOutcome,
    RolloutConfig,
    StepOutcome,
    Weights,
    acceleration_factor,
    exposed_fraction,
    reset,
    scalarized_reward,
    step,
    step_in_place,
)
from .timeline import (
    DefectTimeline,
    generate_nhpp_timeline,
    load_timeline,
    parse_failure_times,
)

__all__ = [
    "__version__",
    "DEFAULT_SOJOURN_BUCKETS",
    "Hyperparams",
    "PolicyVector",
    "QTable",
    "enumerate_naive",
    "q_update",
    "run_policy_episode",
    "run_threshold_episode",
    "run_ucb_episode",
    "state_key",
    "ucb_select",
    "OutcomePoint",
    "ParetoFront",
    "average_suboptimality",
    "interpolate_naive",
    "pareto_front",
    "range_metric",
    "suboptimality",
    "ADVANCE",
    "DEV",
    "STAY",
    "EnvState",
    "EpisodeOutcome",
    "RolloutConfig",
    "StepOutcome",
    "Weights",
    "acceleration_factor",
    "exposed_fraction",
    "reset",
    "scalarized_reward",
    "step",
    "step_in_place",
    "DefectTimeline",
    "generate_nhpp_timeline",
    "load_timeline",
    "parse_failure_times",
]
