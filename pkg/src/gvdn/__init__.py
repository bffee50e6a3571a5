"""Cooperative multi-agent Q-learning on the Switch gridworld, with a
relational network that reweights the team reward to steer which
cooperative equilibrium the agents converge to, plus an exact
finite-horizon solver used as ground truth."""

from .learner import (
    AgentNets,
    Hyperparams,
    RunResult,
    default_hyperparams,
    run_training,
)
from .metrics import AggregateReport, aggregate_runs, evaluate_greedy
from .oracle import OracleSolution, solo_optimal_return, solve
from .presets import PRESET_NAMES, preset
from .relnet import (
    RelationalNetwork,
    aggregate_team_reward,
    identity_network,
    parse_relnet,
    serialize_relnet,
)
from .switch_env import (
    EnvConfig,
    EnvState,
    GridLayout,
    layout_from_json,
    layout_to_json,
    make_env,
    observe,
    render_ascii,
    reset,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "AgentNets",
    "AggregateReport",
    "EnvConfig",
    "EnvState",
    "GridLayout",
    "Hyperparams",
    "OracleSolution",
    "PRESET_NAMES",
    "RelationalNetwork",
    "RunResult",
    "aggregate_runs",
    "aggregate_team_reward",
    "default_hyperparams",
    "evaluate_greedy",
    "identity_network",
    "layout_from_json",
    "layout_to_json",
    "make_env",
    "observe",
    "parse_relnet",
    "preset",
    "render_ascii",
    "reset",
    "run_training",
    "serialize_relnet",
    "solo_optimal_return",
    "solve",
    "step",
]
