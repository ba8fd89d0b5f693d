"""Exhaustive ground truth at desk scale.

Enumerates every distinct generator product up to a depth bound (states are
deduplicated on the shared quantization grid), labels each state with its
minimal product length and its exact remaining-action distance to the
identity ball, and derives an exact action-value table from those distances.
The table plugs into the search module anywhere a trained network does,
which is what makes optimality testable.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .gatesets import GateSet, build
from .linalg import dagger, dist_to_identity, identity, state_key

FRONTIER_GUARD = 10**7


@dataclass
class StateGraph:
    gate_set_name: str
    gate_set_hash: str
    max_depth: int
    eps: float
    state_array: np.ndarray  # (n, dim, dim) complex
    layer: np.ndarray  # minimal product length per state
    dist: np.ndarray  # exact remaining actions to reach the identity ball
    edges: np.ndarray  # (n, |A|) index of state @ gate^dag, -1 if outside
    parents: np.ndarray  # (n, 2) building edge (parent index, gate index); root -1,-1
    index: dict[bytes, int]

    def __len__(self) -> int:
        return self.state_array.shape[0]

    def state(self, i: int) -> np.ndarray:
        return self.state_array[i]

    def lookup(self, u: np.ndarray) -> int | None:
        return self.index.get(state_key(u))

    def witness(self, i: int) -> list[int]:
        """Action indices building state i from the identity, first-applied first."""
        path = []
        while i != 0:
            parent, gate = self.parents[i]
            path.append(int(gate))
            i = int(parent)
        path.reverse()
        return path


def enumerate_states(
    gs: GateSet,
    max_depth: int,
    eps: float = 1e-3,
    frontier_guard: int = FRONTIER_GUARD,
) -> StateGraph:
    """Deduplicated graph of all generator products of length <= max_depth."""
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    eye = identity(gs.dim)
    states: list[np.ndarray] = [eye]
    layer_list = [0]
    parents_list = [(-1, -1)]
    index: dict[bytes, int] = {state_key(eye): 0}

    frontier = [0]
    for depth in range(1, max_depth + 1):
        nxt = []
        for i in frontier:
            base = states[i]
            for a, g in enumerate(gs.matrices):
                prod = g @ base  # new gate applied last: product grows on the left
                key = state_key(prod)
                if key in index:
                    continue
                if len(states) >= frontier_guard:
                    raise RuntimeError(f"state count exceeded frontier guard {frontier_guard}")
                prod.setflags(write=False)
                index[key] = len(states)
                states.append(prod)
                layer_list.append(depth)
                parents_list.append((i, a))
                nxt.append(index[key])
        frontier = nxt
        if not frontier:
            break

    n = len(states)
    state_array = np.stack(states)
    state_array.setflags(write=False)
    layer = np.array(layer_list, dtype=np.int32)
    parents = np.array(parents_list, dtype=np.int64)

    edges = np.full((n, len(gs)), -1, dtype=np.int64)
    daggers = [dagger(g) for g in gs.matrices]
    for i in range(n):
        s = state_array[i]
        for a, gd in enumerate(daggers):
            j = index.get(state_key(s @ gd))
            if j is not None:
                edges[i, a] = j

    # Exact env distances: reverse BFS from every state inside the identity ball.
    dist = np.full(n, -1, dtype=np.int32)
    incoming: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in edges[i]:
            if j >= 0:
                incoming[j].append(i)
    queue: deque[int] = deque()
    for i in range(n):
        if dist_to_identity(state_array[i]) < eps:
            dist[i] = 0
            queue.append(i)
    while queue:
        j = queue.popleft()
        for i in incoming[j]:
            if dist[i] < 0:
                dist[i] = dist[j] + 1
                queue.append(i)
    if np.any(dist < 0):
        # Every product peels down to the identity, so this means eps/dedup misuse.
        raise RuntimeError("some enumerated states cannot reach the identity ball")

    return StateGraph(
        gate_set_name=gs.name,
        gate_set_hash=gs.content_hash,
        max_depth=max_depth,
        eps=eps,
        state_array=state_array,
        layer=layer,
        dist=dist,
        edges=edges,
        parents=parents,
        index=index,
    )


def bfs_shortest(
    target: np.ndarray,
    gs: GateSet,
    eps: float = 1e-3,
    max_depth: int = 10,
    frontier_guard: int = FRONTIER_GUARD,
) -> tuple[int, list[str]] | None:
    """Minimal-length product within eps of the target, with one witness sequence.

    Layered BFS from the identity with quantized deduplication; the witness
    labels are listed first-applied first.  Returns None when no product of
    length <= max_depth matches.
    """
    if target.shape != (gs.dim, gs.dim):
        raise ValueError(f"target dimension {target.shape} does not match gate set dim {gs.dim}")
    eye = identity(gs.dim)

    def close(u: np.ndarray) -> bool:
        t = np.einsum("ij,ij->", u.conj(), target)
        return float(np.sqrt(max(2.0 * gs.dim - 2.0 * t.real, 0.0))) < eps

    if close(eye):
        return 0, []
    states = [eye]
    parents = [(-1, -1)]
    index = {state_key(eye): 0}
    frontier = [0]
    for depth in range(1, max_depth + 1):
        nxt = []
        for i in frontier:
            base = states[i]
            for a, g in enumerate(gs.matrices):
                prod = g @ base
                key = state_key(prod)
                if key in index:
                    continue
                if len(states) >= frontier_guard:
                    raise RuntimeError(f"frontier guard {frontier_guard} exceeded")
                idx = len(states)
                index[key] = idx
                states.append(prod)
                parents.append((i, a))
                if close(prod):
                    path = []
                    j = idx
                    while j != 0:
                        pi, pa = parents[j]
                        path.append(gs.labels[pa])
                        j = pi
                    path.reverse()
                    return depth, path
                nxt.append(idx)
        frontier = nxt
        if not frontier:
            break
    return None


def shortest_from_graph(graph: StateGraph, gs: GateSet, target: np.ndarray, eps: float = 1e-3):
    """Graph-backed variant of bfs_shortest for batch queries against one enumeration."""
    t = np.einsum("nij,ij->n", graph.state_array.conj(), target)
    d = np.sqrt(np.maximum(2.0 * gs.dim - 2.0 * t.real, 0.0))
    hits = np.flatnonzero(d < eps)
    if hits.size == 0:
        return None
    best = hits[np.argmin(graph.layer[hits])]
    length = int(graph.layer[best])
    return length, [gs.labels[a] for a in graph.witness(int(best))]


class QTable:
    """Exact action values over an enumerated graph; drop-in search value source.

    Q(s, a) is minus the remaining-action distance of the transition's next
    state; goal-completing actions score 0.  Pairs whose next state falls
    outside the graph, and states outside the graph entirely, report -inf so
    a search ranks them below every tabulated alternative.
    """

    def __init__(self, graph: StateGraph, q: np.ndarray):
        if q.shape != graph.edges.shape:
            raise ValueError("q table shape must match graph edges")
        self.graph = graph
        self.q = q
        self.sweep_changes: list[float] | None = None
        self.monotone_sweeps: bool | None = None

    @property
    def n_actions(self) -> int:
        return self.q.shape[1]

    def q_values(self, state: np.ndarray) -> np.ndarray:
        i = self.graph.lookup(state)
        if i is None:
            return np.full(self.n_actions, -np.inf)
        return self.q[i]


def tabular_q_adapter(graph: StateGraph) -> QTable:
    """Exact Q from BFS distances alone: Q(s,a) = -dist(next(s,a))."""
    defined = graph.edges >= 0
    child = np.where(defined, graph.edges, 0)
    q = np.where(defined, -graph.dist[child].astype(np.float64), -np.inf)
    return QTable(graph, q)


# -- optional graph cache --------------------------------------------------------


def save_graph(graph: StateGraph, path) -> None:
    np.savez_compressed(
        path,
        gate_set_name=np.array(graph.gate_set_name),
        gate_set_hash=np.array(graph.gate_set_hash),
        max_depth=np.array(graph.max_depth),
        eps=np.array(graph.eps),
        state_array=graph.state_array,
        layer=graph.layer,
        dist=graph.dist,
        edges=graph.edges,
        parents=graph.parents,
    )


def load_graph(path, gs: GateSet | None = None) -> StateGraph:
    """Load a cached graph; verifies the gate-set hash when a set is supplied."""
    with np.load(path) as data:
        name = str(data["gate_set_name"])
        ghash = str(data["gate_set_hash"])
        check = gs if gs is not None else build(name)
        if check.content_hash != ghash:
            raise ValueError(f"graph cache hash mismatch for gate set {name!r}")
        state_array = data["state_array"]
        state_array.setflags(write=False)
        graph = StateGraph(
            gate_set_name=name,
            gate_set_hash=ghash,
            max_depth=int(data["max_depth"]),
            eps=float(data["eps"]),
            state_array=state_array,
            layer=data["layer"],
            dist=data["dist"],
            edges=data["edges"],
            parents=data["parents"],
            index={state_key(state_array[i]): i for i in range(state_array.shape[0])},
        )
    return graph
