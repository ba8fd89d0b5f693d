"""The compiling MDP: deterministic transitions, reward, data generation, replay pool.

States are residual unitaries.  Starting from a target U, taking action `a`
peels one gate off the right: the next state is s * gates[a]^dag.  A target
built as the product g_{k-1} * ... * g_0 is therefore dissolved by replaying
the same action indices a_0, a_1, ..., a_{k-1} in draw order, e.g. a target
assembled from actions [S, S, H] is the matrix H*S*S and unwinds as

    s0 = H*S*S --S--> s1 = H*S --S--> s2 = H --H--> s3 = I   (rewards -1, -1, 0)

The reward is 0 when the next state lands inside the eps-ball around the
identity and -1 otherwise, so every generated trajectory ends with exactly
one zero-reward transition and replay data never suffers sparse rewards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gatesets import GateSet
from .linalg import dagger, dist_to_identity, identity, unitary

DEFAULT_EPS = 1e-3


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass(frozen=True)
class Trajectory:
    target: np.ndarray
    steps: tuple[Transition, ...]

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def actions(self) -> tuple[int, ...]:
        return tuple(t.action for t in self.steps)


def step(s: np.ndarray, a: int, gs: GateSet, eps: float = DEFAULT_EPS) -> Transition:
    """One deterministic MDP step: peel gates[a] off state s."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not 0 <= a < len(gs):
        raise IndexError(f"action index {a} out of range for |A|={len(gs)}")
    next_state = unitary(s @ dagger(gs.matrices[a]))
    done = dist_to_identity(next_state) < eps
    reward = 0.0 if done else -1.0
    return Transition(state=s, action=a, reward=reward, next_state=next_state, done=done)


def target_from_actions(gs: GateSet, actions) -> np.ndarray:
    """Product gates[a_{k-1}] * ... * gates[a_0] applied from the identity."""
    u = identity(gs.dim)
    for a in actions:
        u = unitary(gs.matrices[a] @ u)
    return u


def trajectory_from_actions(gs: GateSet, actions, eps: float = DEFAULT_EPS) -> Trajectory:
    """Reverse walk dissolving the target built from `actions`, in draw order.

    The walk stops at its first terminal transition: when a drawn suffix
    cancels to the identity (e.g. a gate followed by its inverse), the
    trajectory is shorter than the draw but still compiles its target, and
    every trajectory carries exactly one zero-reward transition, at the end.
    """
    actions = list(actions)
    if not actions:
        raise ValueError("need at least one action")
    target = target_from_actions(gs, actions)
    steps = []
    s = target
    for a in actions:
        tr = step(s, a, gs, eps)
        steps.append(tr)
        s = tr.next_state
        if tr.done:
            break
    return Trajectory(target=target, steps=tuple(steps))


def generate_trajectory(gs: GateSet, depth: int, eps: float, rng_seed) -> Trajectory:
    """Uniformly random action sequence of length `depth`, unwound from its own product.

    Every trajectory is a successful compilation by construction; its final
    transition carries the single zero reward.  rng_seed may be an int or a
    numpy Generator (ints give bitwise-reproducible trajectories).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    rng = np.random.default_rng(rng_seed)
    actions = rng.integers(0, len(gs), size=depth)
    return trajectory_from_actions(gs, actions, eps)


class ReplayPool:
    """Fixed-capacity transition store with oldest-first eviction."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def add(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
            self._cursor = (self._cursor + 1) % self.capacity

    def clear(self) -> None:
        self._items.clear()
        self._cursor = 0

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if not self._items:
            raise ValueError("cannot sample from an empty pool")
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)


def fill_pool(
    pool: ReplayPool,
    gs: GateSet,
    depth: int,
    count: int,
    eps: float = DEFAULT_EPS,
    seed=None,
) -> ReplayPool:
    """Deposit `count` transitions from trajectories of length uniform on [1, depth].

    Mixing lengths keeps states near the identity represented at every
    curriculum stage.  The final trajectory is cut mid-walk if it would
    overshoot `count`.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    added = 0
    while added < count:
        length = int(rng.integers(1, depth + 1))
        traj = generate_trajectory(gs, length, eps, rng)
        for tr in traj.steps:
            pool.add(tr)
            added += 1
            if added >= count:
                break
    return pool


def sample_targets(
    gs: GateSet,
    mode: str,
    depth: int,
    n: int,
    seed=None,
) -> list[np.ndarray]:
    """Validation targets: `product` draws depth-length generator products, `haar`
    draws Haar-random unitaries of the set's dimension."""
    from .linalg import random_haar

    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if mode == "product":
        if depth == 0:
            return [identity(gs.dim) for _ in range(n)]
        return [
            target_from_actions(gs, rng.integers(0, len(gs), size=depth)) for _ in range(n)
        ]
    if mode == "haar":
        return [random_haar(gs.dim, rng) for _ in range(n)]
    raise ValueError(f"unknown target mode {mode!r}; expected 'product' or 'haar'")


# -- transition dump format ----------------------------------------------------
#
# One transition per line: <state-hex> <action> <reward> <done>, where the
# state field hex-encodes the little-endian float64 interleaved re/im layout
# (64 bytes for dim 2, 256 bytes for dim 4).


def dump_transitions(transitions, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for tr in transitions:
            vec = np.ascontiguousarray(tr.state).view(np.float64).astype("<f8")
            fh.write(f"{vec.tobytes().hex()} {tr.action} {int(tr.reward)} {int(tr.done)}\n")


def load_transitions(path, gs: GateSet, eps: float = DEFAULT_EPS) -> list[Transition]:
    """Rebuild transitions from a dump; next states are recomputed via step()."""
    out = []
    dim = gs.dim
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if len(fields) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(fields)}")
            raw = bytes.fromhex(fields[0])
            if len(raw) != 16 * dim * dim:
                raise ValueError(
                    f"{path}:{lineno}: state has {len(raw) // 8} doubles, expected {2 * dim * dim}"
                )
            vec = np.frombuffer(raw, dtype="<f8")
            state = unitary(vec.view(np.complex128).reshape(dim, dim))
            tr = step(state, int(fields[1]), gs, eps)
            if int(fields[2]) != int(tr.reward) or int(fields[3]) != int(tr.done):
                raise ValueError(f"{path}:{lineno}: reward/done flags disagree with the transition rule")
            out.append(tr)
    return out
