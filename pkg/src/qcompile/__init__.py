"""qcompile: compile unitaries into discrete gate sequences.

A value network is trained on self-generated reverse trajectories over a
universal gate set, depth by depth, and best-first search guided by that
network turns target unitaries into gate-label sequences.  Exhaustive
breadth-first oracles make optimality checkable at desk scale.
"""

from .analysis import ScalingFit, batch_evaluate, emit_report, fit_scaling
from .env import ReplayPool, Trajectory, Transition, generate_trajectory, sample_targets, step
from .estimator import GateSequenceCompiler, validate_targets
from .gatesets import GATE_SET_NAMES, GateSet, build, inverse_of
from .linalg import (
    avg_fidelity,
    dagger,
    encode_state,
    fnorm_dist,
    matmul,
    spectral_dist,
    unitary,
)
from .oracle import bfs_shortest, enumerate_states, tabular_q_adapter
from .qnet import (
    NetConfig,
    QNetwork,
    TrainConfig,
    adam_step,
    load_model,
    loss_and_grad,
    save_model,
    tabular_value_iteration,
    train_curriculum,
)
from .search import (
    PolicyBudgets,
    SearchResult,
    aq_star,
    boltzmann_rollout,
    evaluate_policies,
    greedy_rollout,
)

__version__ = "0.1.0"

__all__ = [
    "GATE_SET_NAMES",
    "GateSequenceCompiler",
    "GateSet",
    "NetConfig",
    "PolicyBudgets",
    "QNetwork",
    "ReplayPool",
    "ScalingFit",
    "SearchResult",
    "TrainConfig",
    "Trajectory",
    "Transition",
    "adam_step",
    "aq_star",
    "avg_fidelity",
    "batch_evaluate",
    "bfs_shortest",
    "boltzmann_rollout",
    "build",
    "dagger",
    "emit_report",
    "encode_state",
    "enumerate_states",
    "evaluate_policies",
    "fit_scaling",
    "fnorm_dist",
    "generate_trajectory",
    "greedy_rollout",
    "inverse_of",
    "load_model",
    "loss_and_grad",
    "matmul",
    "sample_targets",
    "save_model",
    "spectral_dist",
    "step",
    "tabular_q_adapter",
    "tabular_value_iteration",
    "train_curriculum",
    "unitary",
    "validate_targets",
]
