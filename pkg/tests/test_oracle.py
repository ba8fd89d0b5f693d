import numpy as np
import pytest

from qcompile import gatesets
from qcompile.env import sample_targets, step
from qcompile.gatesets import GateSet, build
from qcompile.linalg import identity, state_key, unitary
from qcompile.oracle import (
    QTable,
    bfs_shortest,
    enumerate_states,
    load_graph,
    save_graph,
    shortest_from_graph,
    tabular_q_adapter,
)


@pytest.fixture(scope="module")
def cl_graph():
    return enumerate_states(build("clifford_t"), 5)


def test_bfs_identity_is_length_zero(clifford):
    assert bfs_shortest(identity(2), clifford, eps=1e-3, max_depth=3) == (0, [])


def test_bfs_single_gate_targets(clifford):
    for label, mat in clifford.gates:
        length, seq = bfs_shortest(mat, clifford, eps=1e-3, max_depth=3)
        assert length == 1 and len(seq) == 1


def test_bfs_hss_is_length_three(clifford):
    hss = unitary(gatesets.HADAMARD @ gatesets.PHASE_S @ gatesets.PHASE_S)
    length, seq = bfs_shortest(hss, clifford, eps=1e-3, max_depth=6)
    assert length == 3
    # the witness, multiplied right-to-left (first label applied first), equals the target
    prod = identity(2)
    for label in seq:
        prod = clifford.matrices[clifford.index_of(label)] @ prod
    assert np.abs(prod - hss).max() < 1e-9


def test_bfs_depth_bounded_by_construction(clifford):
    for i, t in enumerate(sample_targets(clifford, "product", 5, 10, seed=3)):
        length, _ = bfs_shortest(t, clifford, eps=1e-3, max_depth=5)
        assert length <= 5


def test_bfs_returns_none_beyond_depth(clifford):
    target = sample_targets(clifford, "product", 6, 1, seed=41)[0]
    found = bfs_shortest(target, clifford, eps=1e-3, max_depth=6)
    assert found is not None
    if found[0] > 2:
        assert bfs_shortest(target, clifford, eps=1e-3, max_depth=found[0] - 1) is None


def test_bfs_invariant_under_gate_reordering(clifford):
    order = [3, 0, 4, 2, 1]
    shuffled = GateSet(
        name="clifford_shuffled",
        qubits=1,
        labels=tuple(clifford.labels[i] for i in order),
        matrices=tuple(clifford.matrices[i] for i in order),
    )
    for t in sample_targets(clifford, "product", 4, 8, seed=9):
        a = bfs_shortest(t, clifford, eps=1e-3, max_depth=5)
        b = bfs_shortest(t, shuffled, eps=1e-3, max_depth=5)
        assert a[0] == b[0]


def test_enumerate_depth_one_counts(clifford):
    graph = enumerate_states(clifford, 1)
    assert len(graph) == 1 + len(clifford)  # all five single gates are distinct


def test_enumerate_fibonacci_depth_two_count():
    """Independent count: distinct quantized products of length <= 2."""
    gs = build("fibonacci")
    seen = {state_key(identity(2))}
    for g in gs.matrices:
        seen.add(state_key(g))
    for g in gs.matrices:
        for h in gs.matrices:
            seen.add(state_key(unitary(g @ h)))
    graph = enumerate_states(gs, 2)
    assert len(graph) == len(seen)
    # four inverse pairs collapse to I, everything else stays distinct: 1+4+12
    assert len(graph) == 17


def test_enumerate_distances_match_bfs(clifford):
    graph = enumerate_states(clifford, 3)
    for i in range(len(graph)):
        length, _ = bfs_shortest(graph.state(i), clifford, eps=1e-3, max_depth=3)
        assert length == graph.layer[i] == graph.dist[i]


def test_enumerate_witness_rebuilds_state(cl_graph, clifford):
    rng = np.random.default_rng(2)
    for i in rng.integers(0, len(cl_graph), size=20):
        prod = identity(2)
        for a in cl_graph.witness(int(i)):
            prod = clifford.matrices[a] @ prod
        assert state_key(prod) == state_key(cl_graph.state(int(i)))


def test_edges_follow_transition_rule(cl_graph, clifford):
    rng = np.random.default_rng(4)
    for i in rng.integers(0, len(cl_graph), size=30):
        s = cl_graph.state(int(i))
        for a in range(len(clifford)):
            j = cl_graph.edges[int(i), a]
            nxt = step(s, a, clifford, eps=1e-3).next_state
            if j >= 0:
                assert state_key(nxt) == state_key(cl_graph.state(int(j)))
            else:
                assert cl_graph.lookup(nxt) is None


def test_adapter_values(cl_graph, clifford):
    adapter = tabular_q_adapter(cl_graph)
    hs_idx = clifford.index_of("HS")
    hs = clifford.matrices[hs_idx]
    # completing action from a one-gate state scores 0
    assert adapter.q_values(hs)[hs_idx] == 0.0
    # one more gate remains after peeling T off HS*T
    t_idx = clifford.index_of("T")
    hst = unitary(hs @ clifford.matrices[t_idx])
    assert adapter.q_values(hst)[t_idx] == -1.0


def test_adapter_out_of_graph_sentinel(cl_graph):
    from qcompile.linalg import random_haar

    far = random_haar(2, np.random.default_rng(0))
    assert np.all(adapter_values := tabular_q_adapter(cl_graph).q_values(far) == -np.inf)
    assert adapter_values.shape == (5,)


def test_adapter_bookkeeping_identity(cl_graph):
    """max_a Q(s, a) = 1 - dist(s) wherever dist >= 1 (the one-step ledger)."""
    adapter = tabular_q_adapter(cl_graph)
    q_max = np.where(cl_graph.edges >= 0, adapter.q, -np.inf).max(axis=1)
    mask = cl_graph.dist >= 1
    assert np.array_equal(q_max[mask], 1.0 - cl_graph.dist[mask])


def test_inverse_closed_state_symmetry(cl_graph):
    """dist(s) == dist(s^dag) when both states are enumerated."""
    from qcompile.linalg import dagger

    for i in range(len(cl_graph)):
        j = cl_graph.lookup(dagger(cl_graph.state(i)))
        if j is not None:
            assert cl_graph.dist[i] == cl_graph.dist[j]


def test_shortest_from_graph_agrees_with_bfs(cl_graph, clifford):
    for t in sample_targets(clifford, "product", 4, 12, seed=6):
        direct = bfs_shortest(t, clifford, eps=1e-3, max_depth=5)
        via_graph = shortest_from_graph(cl_graph, clifford, t, eps=1e-3)
        assert direct[0] == via_graph[0]


def test_frontier_guard():
    with pytest.raises(RuntimeError, match="guard"):
        enumerate_states(build("clifford_t"), 4, frontier_guard=10)


def test_graph_cache_roundtrip(tmp_path, cl_graph, clifford):
    path = tmp_path / "graph.npz"
    save_graph(cl_graph, path)
    back = load_graph(path, clifford)
    assert len(back) == len(cl_graph)
    assert np.array_equal(back.dist, cl_graph.dist)
    assert np.array_equal(back.edges, cl_graph.edges)
    assert back.lookup(cl_graph.state(5)) == 5


def test_graph_cache_hash_check(tmp_path, cl_graph):
    path = tmp_path / "graph.npz"
    save_graph(cl_graph, path)
    with pytest.raises(ValueError, match="hash mismatch"):
        load_graph(path, build("hrc"))


def test_qtable_shape_validation(cl_graph):
    with pytest.raises(ValueError, match="shape"):
        QTable(cl_graph, np.zeros((3, 3)))
