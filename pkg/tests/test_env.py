import numpy as np
import pytest

from qcompile import gatesets
from qcompile.env import (
    ReplayPool,
    dump_transitions,
    fill_pool,
    generate_trajectory,
    load_transitions,
    sample_targets,
    step,
    target_from_actions,
    trajectory_from_actions,
)
from qcompile.gatesets import GateSet, build
from qcompile.linalg import dagger, fnorm_dist, identity, unitary


@pytest.fixture(scope="module")
def hs_set():
    """Two-gate set {H, S} for the worked example that peels H*S*S down to I."""
    return GateSet(
        name="hs_demo",
        qubits=1,
        labels=("H", "S"),
        matrices=(unitary(gatesets.HADAMARD), unitary(gatesets.PHASE_S)),
    )


def test_step_self_inverse_completes(clifford):
    h = clifford.matrices[clifford.index_of("H")]
    tr = step(h, clifford.index_of("H"), clifford, eps=1e-3)
    assert tr.done and tr.reward == 0.0
    assert np.abs(tr.next_state - np.eye(2)).max() < 1e-15


def test_step_peels_rightmost_factor(hs_set):
    """From H*S*S, action S yields H*S with reward -1."""
    h, s = hs_set.matrices
    hss = unitary(h @ s @ s)
    tr = step(hss, hs_set.index_of("S"), hs_set, eps=1e-3)
    assert not tr.done and tr.reward == -1.0
    assert np.abs(tr.next_state - h @ s).max() < 1e-12


def test_step_validations(clifford):
    with pytest.raises(IndexError):
        step(identity(2), 9, clifford, eps=1e-3)
    with pytest.raises(ValueError, match="eps"):
        step(identity(2), 0, clifford, eps=0.0)


def test_no_shipped_gate_is_near_identity(gate_sets):
    """From I every action earns -1: no gate's dagger sits in the eps ball."""
    for gs in gate_sets.values():
        closest = min(fnorm_dist(dagger(g), identity(gs.dim)) for g in gs.matrices)
        assert closest > 1e-3
        for a in range(len(gs)):
            assert step(identity(gs.dim), a, gs, eps=1e-3).reward == -1.0


def test_worked_trajectory_h_s_s(hs_set):
    """Target H*S*S unwinds as S, S, H with rewards -1, -1, 0 through HS and H."""
    h, s = hs_set.matrices
    si, hi = hs_set.index_of("S"), hs_set.index_of("H")
    traj = trajectory_from_actions(hs_set, [si, si, hi])
    assert np.abs(traj.target - h @ s @ s).max() < 1e-12
    assert traj.actions == (si, si, hi)
    assert [t.reward for t in traj.steps] == [-1.0, -1.0, 0.0]
    assert np.abs(traj.steps[0].next_state - h @ s).max() < 1e-12
    assert np.abs(traj.steps[1].next_state - h).max() < 1e-12
    assert np.abs(traj.steps[2].next_state - np.eye(2)).max() < 1e-12


def test_trajectory_truncates_at_first_terminal(clifford):
    hi = clifford.index_of("H")
    traj = trajectory_from_actions(clifford, [hi, hi, hi])  # H*H*H = H
    assert len(traj) == 1
    assert traj.steps[0].done
    assert np.abs(target_from_actions(clifford, traj.actions) - traj.target).max() < 1e-12


def test_depth_one_trajectory(gate_sets):
    for gs in gate_sets.values():
        traj = generate_trajectory(gs, 1, 1e-3, 3)
        assert len(traj) == 1 and traj.steps[0].reward == 0.0


@pytest.mark.parametrize("depth", [5, 40])
def test_trajectory_reconstruction_and_chaining(clifford, depth):
    traj = generate_trajectory(clifford, depth, 1e-3, 99)
    rebuilt = target_from_actions(clifford, traj.actions)
    assert np.abs(rebuilt - traj.target).max() < 1e-9
    for a, b in zip(traj.steps, traj.steps[1:]):
        assert np.array_equal(a.next_state, b.state)
    rewards = [t.reward for t in traj.steps]
    assert rewards.count(0.0) == 1 and rewards[-1] == 0.0


def test_trajectory_bitwise_determinism(clifford):
    t1 = generate_trajectory(clifford, 12, 1e-3, 77)
    t2 = generate_trajectory(clifford, 12, 1e-3, 77)
    assert t1.actions == t2.actions
    assert all(np.array_equal(a.state, b.state) for a, b in zip(t1.steps, t2.steps))


def test_inverse_closed_reverse_walk_stays_in_action_space(gate_sets):
    """The matrices applied while unwinding are themselves actions of the set."""
    from qcompile.linalg import state_key

    for name in ("clifford_t", "hrc", "fibonacci", "two_qubit_hrc"):
        gs = gate_sets[name]
        member_keys = {state_key(m) for m in gs.matrices}
        traj = generate_trajectory(gs, 6, 1e-3, 11)
        for tr in traj.steps:
            assert state_key(dagger(gs.matrices[tr.action])) in member_keys


def test_pool_eviction():
    pool = ReplayPool(capacity=10)
    fill_pool(pool, build("clifford_t"), depth=3, count=25, seed=0)
    assert len(pool) == 10


def test_pool_transitions_satisfy_invariants(clifford):
    pool = fill_pool(ReplayPool(500), clifford, depth=4, count=400, seed=5)
    for tr in pool:
        assert tr.reward in (0.0, -1.0)
        assert tr.done == (tr.reward == 0.0)
        expected = tr.state @ dagger(clifford.matrices[tr.action])
        assert np.abs(tr.next_state - expected).max() < 1e-10


def test_pool_sampling_requires_data():
    with pytest.raises(ValueError):
        ReplayPool(4).sample(2, np.random.default_rng(0))


def test_fill_pool_realized_length_law(clifford):
    """Realized trajectory lengths follow the derived truncation law.

    Drawn lengths are uniform on {1,2,3}.  A draw of 3 collapses to length 1
    exactly when the last two gates are mutually inverse (probability 1/5 in
    this set); draws of 1 and 2 never truncate.  Hence
    P(1) = 1/3 + 1/15 = 0.4, P(2) = 1/3, P(3) = 4/15.
    """
    pool = fill_pool(ReplayPool(100_000), clifford, depth=3, count=40_000, seed=321)
    stream = list(pool)
    lengths = []
    run = 0
    for tr in stream:
        run += 1
        if tr.done:
            lengths.append(run)
            run = 0
    counts = np.bincount(lengths, minlength=4)[1:4]
    n = counts.sum()
    expected = np.array([0.4, 1 / 3, 4 / 15]) * n
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 5.991  # 5% critical value, 2 degrees of freedom


def test_sample_targets_product_depth_zero(clifford):
    targets = sample_targets(clifford, "product", 0, 5, seed=1)
    assert all(np.array_equal(t, np.eye(2)) for t in targets)


def test_sample_targets_haar_trace_moment(rng):
    """Known Haar moment: E|Tr U|^2 = 1 in any dimension."""
    for gs_name, dim in (("clifford_t", 2), ("two_qubit_hrc", 4)):
        targets = sample_targets(build(gs_name), "haar", 0, 20_000, seed=8)
        vals = np.array([abs(np.trace(t)) ** 2 for t in targets])
        se = vals.std(ddof=1) / np.sqrt(len(vals))
        assert abs(vals.mean() - 1.0) < 3 * se


def test_sample_targets_products_are_compilable(clifford):
    from qcompile.oracle import bfs_shortest

    for t in sample_targets(clifford, "product", 6, 15, seed=17):
        found = bfs_shortest(t, clifford, eps=1e-3, max_depth=6)
        assert found is not None and found[0] <= 6


def test_sample_targets_rejects_unknown_mode(clifford):
    with pytest.raises(ValueError, match="mode"):
        sample_targets(clifford, "unitary-soup", 3, 1, seed=0)


def test_dump_load_roundtrip(tmp_path, clifford):
    traj = generate_trajectory(clifford, 6, 1e-3, 13)
    path = tmp_path / "transitions.txt"
    dump_transitions(traj.steps, path)
    back = load_transitions(path, clifford)
    assert len(back) == len(traj.steps)
    for a, b in zip(traj.steps, back):
        assert np.array_equal(a.state, b.state)
        assert (a.action, a.reward, a.done) == (b.action, b.reward, b.done)


def test_load_transitions_diagnostics(tmp_path, clifford):
    path = tmp_path / "bad.txt"
    path.write_text("deadbeef 0 0 1\n")
    with pytest.raises(ValueError, match="doubles"):
        load_transitions(path, clifford)
    path.write_text("junk\n")
    with pytest.raises(ValueError, match="4 fields"):
        load_transitions(path, clifford)
