"""Scikit-learn style front end: fit a compiler, predict gate sequences.

`fit` needs no input data: training experience is generated internally by
unwinding random generator products, so `fit(X=None)` trains the value
network over the configured depth curriculum.  `predict` maps an array of
target unitaries to gate-label sequences via best-first search, and `score`
returns their mean compiled fidelity.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .gatesets import build
from .linalg import unitary
from .qnet import NetConfig, TrainConfig, train_curriculum
from .search import SearchResult, aq_star


def validate_targets(X, dim: int) -> list[np.ndarray]:
    """Coerce X into a list of validated dim x dim unitaries.

    Accepts a single matrix, a sequence of matrices, or an (n, dim, dim) array.
    """
    arr = np.asarray(X)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3 or arr.shape[1:] != (dim, dim):
        raise ValueError(f"expected targets of shape (n, {dim}, {dim}), got {arr.shape}")
    return [unitary(arr[i]) for i in range(arr.shape[0])]


class GateSequenceCompiler(BaseEstimator):
    """Compile unitaries into discrete gate sequences over a named universal set.

    Parameters mirror the training and inference knobs: network widths
    (`hidden1`, `hidden2`, `blocks`, `block_width`), the optimization setup
    (`learning_rate`, `discount`, `loss_threshold`, `batch_size`,
    `transitions_per_depth`, `target_sync_interval`, `step_budget`,
    `pool_capacity`), the curriculum range (`depth_start`..`depth_max`), the
    compiling tolerance `eps`, and the search `node_budget`.

    Fitted attributes: `gate_set_` (the action space), `net_` (the trained
    value network), `training_log_` (per-depth rows), `checkpoints_`
    (per-depth network copies when `keep_checkpoints`).
    """

    def __init__(
        self,
        gate_set: str = "clifford_t",
        hidden1: int = 256,
        hidden2: int = 128,
        blocks: int = 2,
        block_width: int = 128,
        learning_rate: float = 1e-3,
        weight_decay: float = 0.0,
        discount: float = 1.0,
        loss_threshold: float = 1e-2,
        depth_start: int = 3,
        depth_max: int = 8,
        batch_size: int = 512,
        transitions_per_depth: int = 20000,
        target_sync_interval: int = 500,
        step_budget: int = 20000,
        pool_capacity: int = 1_000_000,
        eps: float = 1e-3,
        node_budget: int = 10_000,
        keep_checkpoints: bool = False,
        random_state: int = 0,
    ):
        self.gate_set = gate_set
        self.hidden1 = hidden1
        self.hidden2 = hidden2
        self.blocks = blocks
        self.block_width = block_width
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.discount = discount
        self.loss_threshold = loss_threshold
        self.depth_start = depth_start
        self.depth_max = depth_max
        self.batch_size = batch_size
        self.transitions_per_depth = transitions_per_depth
        self.target_sync_interval = target_sync_interval
        self.step_budget = step_budget
        self.pool_capacity = pool_capacity
        self.eps = eps
        self.node_budget = node_budget
        self.keep_checkpoints = keep_checkpoints
        self.random_state = random_state

    def _net_config(self, gs) -> NetConfig:
        return NetConfig(
            input_dim=2 * gs.dim**2,
            hidden1=self.hidden1,
            hidden2=self.hidden2,
            blocks=self.blocks,
            block_width=self.block_width,
            outputs=len(gs),
        )

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.learning_rate,
            weight_decay=self.weight_decay,
            gamma=self.discount,
            delta=self.loss_threshold,
            d_start=self.depth_start,
            d_max=self.depth_max,
            batch=self.batch_size,
            transitions_per_depth=self.transitions_per_depth,
            target_sync_interval=self.target_sync_interval,
            seed=self.random_state,
            eps=self.eps,
            pool_capacity=self.pool_capacity,
            step_budget=self.step_budget,
            keep_checkpoints=self.keep_checkpoints,
        )

    def fit(self, X=None, y=None):
        """Train the value network; X and y are ignored (data is self-generated)."""
        gs = build(self.gate_set)
        result = train_curriculum(gs, self._net_config(gs), self._train_config())
        self.gate_set_ = gs
        self.net_ = result.net
        self.training_log_ = result.log
        self.checkpoints_ = result.checkpoints
        return self

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise NotFittedError("this GateSequenceCompiler instance is not fitted yet; call fit() first")

    def compile(self, target) -> SearchResult:
        """Full search result for a single target unitary."""
        self._check_fitted()
        (t,) = validate_targets(target, self.gate_set_.dim)
        return aq_star(t, self.gate_set_, self.net_, eps=self.eps, node_budget=self.node_budget)

    def compile_all(self, X) -> list[SearchResult]:
        self._check_fitted()
        targets = validate_targets(X, self.gate_set_.dim)
        return [
            aq_star(t, self.gate_set_, self.net_, eps=self.eps, node_budget=self.node_budget)
            for t in targets
        ]

    def predict(self, X) -> list[list[str]]:
        """Gate-label sequences (first-applied first) for an array of targets."""
        return [list(r.sequence) for r in self.compile_all(X)]

    def score(self, X, y=None) -> float:
        """Mean compiled fidelity over the given targets."""
        results = self.compile_all(X)
        return float(np.mean([r.fidelity for r in results]))
