"""Inference: AQ* best-first search plus greedy and Boltzmann baseline policies.

AQ* keeps a max-priority queue of (state, action) pairs keyed by
f = g + Q(state, action), where g is the cumulative reward spent reaching
the state (0, -1, -2, ...) and Q estimates the reward still to come.  Popping
a pair materializes its next state; the goal test fires on generation, so a
one-gate target is solved on the first pop no matter how the values rank.
A state is (re)expanded only when reached with a strictly better g, with
states identified on the same quantization grid the oracle uses.

All sequences are reported first-applied first: the compiled matrix is the
product of the labeled gates read right to left.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass
from itertools import count

import numpy as np

from . import env
from .gatesets import GateSet
from .linalg import (
    avg_fidelity,
    dagger,
    dist_to_identity,
    identity,
    state_key,
    unitary,
)

STATUS_SUCCESS = "success"
STATUS_BUDGET = "budget_exhausted"


@dataclass(frozen=True)
class SearchNode:
    state: np.ndarray
    g: float  # cumulative reward so far, <= 0
    parent: "SearchNode | None"
    via_action: int | None
    depth: int


@dataclass(frozen=True)
class SearchResult:
    sequence: tuple[str, ...]
    actions: tuple[int, ...]
    compiled: np.ndarray
    distance: float
    fidelity: float
    nodes_expanded: int
    status: str

    @property
    def success(self) -> bool:
        return self.status == STATUS_SUCCESS

    def __len__(self) -> int:
        return len(self.actions)


def _path_actions(node: SearchNode) -> list[int]:
    path: list[int] = []
    while node.via_action is not None:
        path.append(node.via_action)
        node = node.parent
    path.reverse()
    return path


def _result(gs: GateSet, target, actions, distance, expanded, status) -> SearchResult:
    compiled = env.target_from_actions(gs, actions)
    return SearchResult(
        sequence=tuple(gs.labels[a] for a in actions),
        actions=tuple(actions),
        compiled=compiled,
        distance=float(distance),
        fidelity=avg_fidelity(compiled, target),
        nodes_expanded=expanded,
        status=status,
    )


def aq_star(
    target: np.ndarray,
    gs: GateSet,
    value_source,
    eps: float = 1e-3,
    node_budget: int = 100_000,
) -> SearchResult:
    """Best-first search for a gate sequence within eps of the target.

    All |A| root actions are seeded into the queue (the per-expansion loop
    does the same for every child, and seeding only the argmax action would
    discard root alternatives for no benefit).  On budget exhaustion the
    closest state generated so far is returned with its partial sequence.
    """
    if target.shape != (gs.dim, gs.dim):
        raise ValueError(f"target dimension {target.shape} does not match gate set dim {gs.dim}")
    if node_budget < 1:
        raise ValueError("node_budget must be >= 1")
    target = unitary(target)
    root_dist = dist_to_identity(target)
    if root_dist < eps:
        return _result(gs, target, [], root_dist, 0, STATUS_SUCCESS)

    daggers = [dagger(g) for g in gs.matrices]
    root = SearchNode(state=target, g=0.0, parent=None, via_action=None, depth=0)
    closed: dict[bytes, float] = {state_key(target): 0.0}
    tie = count()
    open_heap: list[tuple[float, int, SearchNode, int]] = []
    root_q = value_source.q_values(target)
    for a in range(len(gs)):
        heapq.heappush(open_heap, (-(root.g + root_q[a]), next(tie), root, a))

    best_dist = root_dist
    best: tuple[SearchNode, int] | None = None
    expanded = 0
    while open_heap and expanded < node_budget:
        _, _, node, a = heapq.heappop(open_heap)
        nxt = node.state @ daggers[a]
        expanded += 1
        d = dist_to_identity(nxt)
        if d < best_dist:
            best_dist = d
            best = (node, a)
        if d < eps:
            actions = _path_actions(node) + [a]
            return _result(gs, target, actions, d, expanded, STATUS_SUCCESS)
        g_next = node.g - 1.0
        key = state_key(nxt)
        known = closed.get(key)
        if known is not None and g_next <= known:
            continue
        closed[key] = g_next
        child = SearchNode(state=nxt, g=g_next, parent=node, via_action=a, depth=node.depth + 1)
        q = value_source.q_values(nxt)  # one forward pass scores every action
        for ap in range(len(gs)):
            heapq.heappush(open_heap, (-(g_next + q[ap]), next(tie), child, ap))

    if best is None:
        return _result(gs, target, [], root_dist, expanded, STATUS_BUDGET)
    node, a = best
    actions = _path_actions(node) + [a]
    return _result(gs, target, actions, best_dist, expanded, STATUS_BUDGET)


def greedy_rollout(
    target: np.ndarray,
    gs: GateSet,
    value_source,
    eps: float = 1e-3,
    max_steps: int = 40,
) -> SearchResult:
    """Always take argmax_a Q(s, a); ties break toward the lowest action index."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    target = unitary(target)
    if dist_to_identity(target) < eps:
        return _result(gs, target, [], dist_to_identity(target), 0, STATUS_SUCCESS)
    s = target
    actions: list[int] = []
    for step_i in range(max_steps):
        q = value_source.q_values(s)
        a = int(np.argmax(q))
        tr = env.step(s, a, gs, eps)
        actions.append(a)
        s = tr.next_state
        if tr.done:
            return _result(gs, target, actions, dist_to_identity(s), step_i + 1, STATUS_SUCCESS)
    return _result(gs, target, actions, dist_to_identity(s), max_steps, STATUS_BUDGET)


def boltzmann_action_probs(q: np.ndarray, temperature_kt: float, maximize: bool = False) -> np.ndarray:
    """Softmax over exp(-Q/kT) as printed in the source formula (low values win);
    maximize=True flips the sign so high values win.  Non-finite entries get
    probability zero; an all-non-finite row falls back to uniform."""
    if temperature_kt <= 0:
        raise ValueError("temperature_kt must be positive")
    z = np.where(np.isfinite(q), (q if maximize else -q) / temperature_kt, -np.inf)
    if not np.any(np.isfinite(z)):
        return np.full(q.shape, 1.0 / q.size)
    z = z - z[np.isfinite(z)].max()
    p = np.where(np.isfinite(z), np.exp(z), 0.0)
    return p / p.sum()


def boltzmann_rollout(
    target: np.ndarray,
    gs: GateSet,
    value_source,
    eps: float = 1e-3,
    max_steps: int = 40,
    temperature_kt: float = 1.0,
    seed=None,
    maximize: bool = False,
) -> SearchResult:
    """Sample actions from the Boltzmann distribution over Q; seeded and reproducible."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    target = unitary(target)
    if dist_to_identity(target) < eps:
        return _result(gs, target, [], dist_to_identity(target), 0, STATUS_SUCCESS)
    rng = np.random.default_rng(seed)
    s = target
    actions: list[int] = []
    for step_i in range(max_steps):
        probs = boltzmann_action_probs(value_source.q_values(s), temperature_kt, maximize)
        a = int(rng.choice(len(gs), p=probs))
        tr = env.step(s, a, gs, eps)
        actions.append(a)
        s = tr.next_state
        if tr.done:
            return _result(gs, target, actions, dist_to_identity(s), step_i + 1, STATUS_SUCCESS)
    return _result(gs, target, actions, dist_to_identity(s), max_steps, STATUS_BUDGET)


# -- strategy comparison ---------------------------------------------------------


@dataclass(frozen=True)
class PolicyBudgets:
    node_budget: int = 100_000
    max_steps: int = 40
    boltzmann_kt: float = 1.0
    boltzmann_maximize: bool = True
    seed: int = 0


@dataclass(frozen=True)
class StrategyStats:
    strategy: str
    n_targets: int
    n_success: int
    mean_fidelity: float
    var_fidelity: float
    mean_length: float  # over successes
    var_length: float

    @property
    def success_rate(self) -> float:
        return self.n_success / self.n_targets


def evaluate_policies(
    targets,
    gs: GateSet,
    value_source,
    eps: float = 1e-3,
    budgets: PolicyBudgets = PolicyBudgets(),
) -> list[StrategyStats]:
    """Run AQ*, greedy, and Boltzmann on every target; fidelity statistics cover
    all targets, length statistics cover successful compilations only."""
    targets = list(targets)
    if not targets:
        raise ValueError("need at least one target")
    seeds = np.random.SeedSequence(budgets.seed).spawn(len(targets))
    runs: dict[str, list[SearchResult]] = {"aq_star": [], "greedy": [], "boltzmann": []}
    for i, t in enumerate(targets):
        runs["aq_star"].append(aq_star(t, gs, value_source, eps, budgets.node_budget))
        runs["greedy"].append(greedy_rollout(t, gs, value_source, eps, budgets.max_steps))
        runs["boltzmann"].append(
            boltzmann_rollout(
                t,
                gs,
                value_source,
                eps,
                budgets.max_steps,
                temperature_kt=budgets.boltzmann_kt,
                seed=seeds[i],
                maximize=budgets.boltzmann_maximize,
            )
        )
    stats = []
    for strategy, results in runs.items():
        fids = np.array([r.fidelity for r in results])
        lengths = np.array([len(r) for r in results if r.success], dtype=np.float64)
        stats.append(
            StrategyStats(
                strategy=strategy,
                n_targets=len(results),
                n_success=sum(r.success for r in results),
                mean_fidelity=float(fids.mean()),
                var_fidelity=float(fids.var()),
                mean_length=float(lengths.mean()) if lengths.size else float("nan"),
                var_length=float(lengths.var()) if lengths.size else float("nan"),
            )
        )
    return stats


COMPARISON_COLUMNS = (
    "strategy",
    "n_targets",
    "n_success",
    "success_rate",
    "mean_fidelity",
    "var_fidelity",
    "mean_length",
    "var_length",
)


def write_comparison_csv(stats: list[StrategyStats], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPARISON_COLUMNS)
        for s in stats:
            writer.writerow(
                [
                    s.strategy,
                    s.n_targets,
                    s.n_success,
                    repr(s.success_rate),
                    repr(s.mean_fidelity),
                    repr(s.var_fidelity),
                    repr(s.mean_length),
                    repr(s.var_length),
                ]
            )


def format_sequence(result: SearchResult) -> str:
    """One-line output: labels first-applied first, then a metadata comment."""
    labels = " ".join(result.sequence)
    meta = f"# distance={result.distance!r} fidelity={result.fidelity!r} nodes={result.nodes_expanded}"
    return f"{labels}  {meta}" if labels else meta
