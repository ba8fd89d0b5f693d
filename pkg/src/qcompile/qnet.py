"""Value network, exact analytic gradients, Adam, and the depth-curriculum trainer.

The network maps an encoded residual unitary to one value per action:
dense -> relu -> dense -> relu -> [residual blocks] -> linear output head.
Each residual block is dense -> relu -> dense with the block input added
back before a final relu.  When the second hidden width differs from the
block width a single linear projection sits in front of the first block.

Gradients are hand-derived backpropagation of the mean-squared Bellman
error; regression targets come from a frozen parameter copy and never
receive gradient.  Training sweeps a depth curriculum: at each depth the
replay pool is rebuilt from scratch and optimization runs until an
exponential moving average of the loss drops below the threshold (or a
step budget runs out, which is logged, not fatal).
"""

from __future__ import annotations

import logging
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .env import ReplayPool, Transition, fill_pool
from .gatesets import GateSet, build
from .linalg import encode_batch, encode_state

logger = logging.getLogger(__name__)

MODEL_MAGIC = b"QNET"
MODEL_VERSION = 1


@dataclass(frozen=True)
class NetConfig:
    input_dim: int
    hidden1: int
    hidden2: int
    blocks: int
    block_width: int
    outputs: int
    activation: str = "relu"

    def __post_init__(self):
        for name in ("input_dim", "hidden1", "hidden2", "block_width", "outputs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.blocks < 0:
            raise ValueError("blocks must be >= 0")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")

    @property
    def has_projection(self) -> bool:
        return self.blocks > 0 and self.hidden2 != self.block_width

    @property
    def trunk_width(self) -> int:
        return self.block_width if self.blocks > 0 else self.hidden2

    def parameter_shapes(self) -> list[tuple[int, ...]]:
        """Flat parameter layout, the documented model-file tensor order."""
        shapes: list[tuple[int, ...]] = [
            (self.input_dim, self.hidden1),
            (self.hidden1,),
            (self.hidden1, self.hidden2),
            (self.hidden2,),
        ]
        if self.has_projection:
            shapes += [(self.hidden2, self.block_width), (self.block_width,)]
        for _ in range(self.blocks):
            w = self.block_width
            shapes += [(w, w), (w,), (w, w), (w,)]
        shapes += [(self.trunk_width, self.outputs), (self.outputs,)]
        return shapes


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    weight_decay: float = 0.0
    gamma: float = 1.0
    delta: float = 1e-2
    d_start: int = 3
    d_max: int = 40
    batch: int = 512
    transitions_per_depth: int = 20000
    target_sync_interval: int = 500
    seed: int = 0
    eps: float = 1e-3
    pool_capacity: int = 1_000_000
    step_budget: int = 20000
    ema_half_life: int = 100
    keep_checkpoints: bool = True

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.d_start < 1 or self.d_start > self.d_max:
            raise ValueError(f"need 1 <= d_start <= d_max, got d_start={self.d_start}, d_max={self.d_max}")
        if self.batch < 1 or self.transitions_per_depth < 1:
            raise ValueError("batch and transitions_per_depth must be >= 1")
        if self.target_sync_interval < 1 or self.step_budget < 1:
            raise ValueError("target_sync_interval and step_budget must be >= 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


class QNetwork:
    """Parameter container with live and frozen copies plus lazy Adam state."""

    def __init__(self, config: NetConfig, params: list[np.ndarray]):
        shapes = config.parameter_shapes()
        if [p.shape for p in params] != shapes:
            raise ValueError("parameter shapes do not match the config layout")
        self.config = config
        self.params = params
        self.frozen = [p.copy() for p in params]
        self._adam_m: list[np.ndarray] | None = None
        self._adam_v: list[np.ndarray] | None = None
        self._adam_t = 0

    @classmethod
    def initialize(cls, config: NetConfig, seed=0) -> "QNetwork":
        rng = np.random.default_rng(seed)
        params = []
        for shape in config.parameter_shapes():
            if len(shape) == 2:
                fan_in = shape[0]
                params.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape))
            else:
                params.append(np.zeros(shape))
        return cls(config, params)

    def sync_frozen(self) -> None:
        self.frozen = [p.copy() for p in self.params]

    def copy(self) -> "QNetwork":
        dup = QNetwork(self.config, [p.copy() for p in self.params])
        dup.frozen = [p.copy() for p in self.frozen]
        if self._adam_m is not None:
            dup._adam_m = [m.copy() for m in self._adam_m]
            dup._adam_v = [v.copy() for v in self._adam_v]
            dup._adam_t = self._adam_t
        return dup

    # -- forward -----------------------------------------------------------

    def forward(self, state_vec: np.ndarray, use_frozen: bool = False) -> np.ndarray:
        params = self.frozen if use_frozen else self.params
        x = np.asarray(state_vec, dtype=np.float64)
        squeeze = x.ndim == 1
        out, _ = _forward(self.config, params, np.atleast_2d(x), want_cache=False)
        return out[0] if squeeze else out

    def q_values(self, state: np.ndarray) -> np.ndarray:
        """Action values for one unitary state (live parameters)."""
        return self.forward(encode_state(state))


def _forward(cfg: NetConfig, params: list[np.ndarray], x: np.ndarray, want_cache: bool):
    if x.shape[1] != cfg.input_dim:
        raise ValueError(f"input width {x.shape[1]} != config input_dim {cfg.input_dim}")
    z1 = x @ params[0] + params[1]
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ params[2] + params[3]
    a2 = np.maximum(z2, 0.0)
    i = 4
    h = a2
    if cfg.has_projection:
        h = h @ params[4] + params[5]
        i = 6
    block_caches = []
    for _ in range(cfg.blocks):
        wa, ba, wb, bb = params[i : i + 4]
        i += 4
        za = h @ wa + ba
        ta = np.maximum(za, 0.0)
        zb = ta @ wb + bb
        pre = h + zb  # skip connection joins before the final relu
        if want_cache:
            block_caches.append((h, za, ta, pre))
        h = np.maximum(pre, 0.0)
    out = h @ params[i] + params[i + 1]
    cache = (x, z1, a1, z2, a2, block_caches, h) if want_cache else None
    return out, cache


def _backward(cfg: NetConfig, params: list[np.ndarray], cache, d_out: np.ndarray) -> list[np.ndarray]:
    x, z1, a1, z2, a2, block_caches, h_last = cache
    grads: list[np.ndarray | None] = [None] * len(params)
    i = len(params) - 2
    grads[i] = h_last.T @ d_out
    grads[i + 1] = d_out.sum(axis=0)
    dh = d_out @ params[i].T
    for bi in range(cfg.blocks - 1, -1, -1):
        j = (6 if cfg.has_projection else 4) + 4 * bi
        wa, _, wb, _ = params[j : j + 4]
        h_in, za, ta, pre = block_caches[bi]
        d_pre = dh * (pre > 0.0)
        grads[j + 2] = ta.T @ d_pre
        grads[j + 3] = d_pre.sum(axis=0)
        d_ta = d_pre @ wb.T
        d_za = d_ta * (za > 0.0)
        grads[j] = h_in.T @ d_za
        grads[j + 1] = d_za.sum(axis=0)
        dh = d_pre + d_za @ wa.T  # skip path + main path
    if cfg.has_projection:
        grads[4] = a2.T @ dh
        grads[5] = dh.sum(axis=0)
        dh = dh @ params[4].T
    d_z2 = dh * (z2 > 0.0)
    grads[2] = a1.T @ d_z2
    grads[3] = d_z2.sum(axis=0)
    d_a1 = d_z2 @ params[2].T
    d_z1 = d_a1 * (z1 > 0.0)
    grads[0] = x.T @ d_z1
    grads[1] = d_z1.sum(axis=0)
    return grads  # type: ignore[return-value]


def loss_and_grad(net: QNetwork, batch: list[Transition], gamma: float):
    """Mean-squared Bellman error and its exact gradient w.r.t. live parameters.

    Targets y = r + gamma * max_a' Q_frozen(s', a') are computed with the
    frozen copy and treated as constants; terminal transitions bootstrap to
    y = r (= 0 under the compiling reward).
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    n = len(batch)
    states = encode_batch([t.state for t in batch])
    next_states = encode_batch([t.next_state for t in batch])
    rewards = np.array([t.reward for t in batch])
    dones = np.array([t.done for t in batch], dtype=bool)
    actions = np.array([t.action for t in batch], dtype=np.intp)

    q_next, _ = _forward(net.config, net.frozen, next_states, want_cache=False)
    y = rewards + gamma * q_next.max(axis=1)
    y[dones] = rewards[dones]

    q, cache = _forward(net.config, net.params, states, want_cache=True)
    picked = q[np.arange(n), actions]
    diff = picked - y
    loss = float(np.mean(diff**2))

    d_out = np.zeros_like(q)
    d_out[np.arange(n), actions] = 2.0 * diff / n
    grads = _backward(net.config, net.params, cache, d_out)
    return loss, grads


def adam_step(
    net: QNetwork,
    gradients: list[np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps_adam: float = 1e-8,
) -> QNetwork:
    """Standard Adam update with bias correction, in place on live parameters."""
    if [g.shape for g in gradients] != [p.shape for p in net.params]:
        raise ValueError("gradient shapes do not match parameters")
    if net._adam_m is None:
        net._adam_m = [np.zeros_like(p) for p in net.params]
        net._adam_v = [np.zeros_like(p) for p in net.params]
    net._adam_t += 1
    t = net._adam_t
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for p, g, m, v in zip(net.params, gradients, net._adam_m, net._adam_v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g**2
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps_adam)
    return net


# -- curriculum training -------------------------------------------------------


@dataclass(frozen=True)
class DepthLog:
    depth: int
    steps: int
    loss: float
    wall_time: float
    budget_exhausted: bool


@dataclass
class TrainResult:
    net: QNetwork
    log: list[DepthLog]
    checkpoints: dict[int, QNetwork] = field(default_factory=dict)


def train_curriculum(gs: GateSet, ncfg: NetConfig, tcfg: TrainConfig, on_depth=None) -> TrainResult:
    """Train depth by depth, refilling the pool and advancing when the loss EMA < delta.

    The frozen copy is refreshed every target_sync_interval optimizer steps
    and at every depth boundary.  Seeding is derived from tcfg.seed alone, so
    identical configs reproduce identical logs and parameters bitwise.
    """
    if ncfg.input_dim != 2 * gs.dim**2:
        raise ValueError(f"input_dim {ncfg.input_dim} does not match gate set dimension {gs.dim}")
    if ncfg.outputs != len(gs):
        raise ValueError(f"outputs {ncfg.outputs} does not match action-space size {len(gs)}")

    root = np.random.SeedSequence(tcfg.seed)
    init_ss, batch_ss, pool_ss = root.spawn(3)
    net = QNetwork.initialize(ncfg, init_ss)
    batch_rng = np.random.default_rng(batch_ss)
    pool = ReplayPool(tcfg.pool_capacity)
    decay = 0.5 ** (1.0 / tcfg.ema_half_life)

    result = TrainResult(net=net, log=[])
    for depth in range(tcfg.d_start, tcfg.d_max + 1):
        started = time.perf_counter()
        pool.clear()
        fill_pool(pool, gs, depth, tcfg.transitions_per_depth, tcfg.eps, seed=pool_ss.spawn(1)[0])
        ema = None
        steps = 0
        while steps < tcfg.step_budget:
            batch = pool.sample(tcfg.batch, batch_rng)
            loss, grads = loss_and_grad(net, batch, tcfg.gamma)
            if tcfg.weight_decay > 0.0:
                grads = [g + tcfg.weight_decay * p for g, p in zip(grads, net.params)]
            adam_step(net, grads, tcfg.lr)
            steps += 1
            ema = loss if ema is None else decay * ema + (1.0 - decay) * loss
            if steps % tcfg.target_sync_interval == 0:
                net.sync_frozen()
            if ema < tcfg.delta:
                break
        net.sync_frozen()
        exhausted = ema is None or ema >= tcfg.delta
        if exhausted:
            logger.warning(
                "depth %d: step budget %d exhausted with loss %.4g >= delta %.4g",
                depth, tcfg.step_budget, ema, tcfg.delta,
            )
        row = DepthLog(
            depth=depth,
            steps=steps,
            loss=float(ema),
            wall_time=time.perf_counter() - started,
            budget_exhausted=exhausted,
        )
        result.log.append(row)
        if tcfg.keep_checkpoints:
            result.checkpoints[depth] = net.copy()
        if on_depth is not None:
            on_depth(row)
    return result


def tabular_value_iteration(gs: GateSet, max_depth: int, eps: float = 1e-3, state_guard: int = 10**6):
    """Exact Q table on the enumerated state set via synchronous Bellman sweeps.

    Sweeps Q(s,a) <- r + max_a' Q(s',a') (discount 1, terminal bootstraps to 0)
    over the deduplicated product graph until the sup-norm change is < 1e-12.
    Entries whose next state falls outside the graph stay undefined.  Returns
    a table usable as a search value source; per-sweep sup-changes are kept on
    the table for convergence inspection.
    """
    from .oracle import QTable, enumerate_states

    graph = enumerate_states(gs, max_depth, eps)
    n = len(graph)
    if n > state_guard:
        raise RuntimeError(f"state count {n} exceeds guard {state_guard}")
    edges = graph.edges
    defined = edges >= 0
    child = np.where(defined, edges, 0)
    goal = graph.dist == 0
    goal_child = defined & goal[child]

    q = np.where(defined, 0.0, -np.inf)
    changes = []
    monotone = True  # from the optimistic all-zero start, sweeps only lower values
    for _ in range(10 * max_depth + 100):
        v = np.where(defined, q, -np.inf).max(axis=1)
        q_new = np.where(goal_child, 0.0, -1.0 + v[child])
        q_new = np.where(defined, q_new, -np.inf)
        diff = q_new[defined] - q[defined]
        change = float(np.max(np.abs(diff))) if diff.size else 0.0
        monotone = monotone and (diff.size == 0 or float(diff.max()) <= 1e-12)
        q = q_new
        changes.append(change)
        if change < 1e-12:
            break
    else:
        raise RuntimeError("value iteration failed to converge")
    table = QTable(graph, q)
    table.sweep_changes = changes
    table.monotone_sweeps = monotone
    return table


# -- model file ------------------------------------------------------------------
#
# Layout (all integers little-endian uint32, all tensors little-endian float64):
#   magic "QNET" | version | gate-set name (len+utf8) | gate-set hash (len+utf8)
#   | input_dim hidden1 hidden2 blocks block_width outputs | activation (len+utf8)
#   | tensor count | per tensor: ndim, dims..., raw data
# Tensors appear in NetConfig.parameter_shapes() order (live parameters only;
# the frozen copy is reconstructed as an equal copy on load).


def _write_str(fh, s: str) -> None:
    raw = s.encode("utf-8")
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)


def _read_exact(fh, n: int, what: str) -> bytes:
    raw = fh.read(n)
    if len(raw) != n:
        raise ValueError(f"model file truncated while reading {what}")
    return raw


def _read_str(fh, what: str) -> str:
    (n,) = struct.unpack("<I", _read_exact(fh, 4, what + " length"))
    return _read_exact(fh, n, what).decode("utf-8")


def save_model(net: QNetwork, gs: GateSet, path) -> None:
    cfg = net.config
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", MODEL_VERSION))
        _write_str(fh, gs.name)
        _write_str(fh, gs.content_hash)
        fh.write(
            struct.pack(
                "<6I", cfg.input_dim, cfg.hidden1, cfg.hidden2, cfg.blocks, cfg.block_width, cfg.outputs
            )
        )
        _write_str(fh, cfg.activation)
        fh.write(struct.pack("<I", len(net.params)))
        for p in net.params:
            fh.write(struct.pack("<I", p.ndim))
            fh.write(struct.pack(f"<{p.ndim}I", *p.shape))
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_model(path) -> tuple[QNetwork, GateSet]:
    """Load a model file; rebuilds and verifies the embedded gate set."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MODEL_MAGIC:
            raise ValueError(f"bad magic {magic!r}; not a model file")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != MODEL_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        gs_name = _read_str(fh, "gate-set name")
        gs_hash = _read_str(fh, "gate-set hash")
        gs = build(gs_name)
        if gs.content_hash != gs_hash:
            raise ValueError(
                f"gate-set hash mismatch for {gs_name!r}: model was trained against a "
                "different gate ordering; refusing to map action indices"
            )
        fields = struct.unpack("<6I", _read_exact(fh, 24, "net config"))
        activation = _read_str(fh, "activation")
        cfg = NetConfig(*fields, activation=activation)
        (count,) = struct.unpack("<I", _read_exact(fh, 4, "tensor count"))
        shapes = cfg.parameter_shapes()
        if count != len(shapes):
            raise ValueError(f"tensor count {count} does not match config layout {len(shapes)}")
        params = []
        for shape in shapes:
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4, "tensor rank"))
            dims = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim, "tensor shape"))
            if dims != shape:
                raise ValueError(f"tensor shape {dims} does not match config layout {shape}")
            nbytes = 8 * int(np.prod(dims))
            data = np.frombuffer(_read_exact(fh, nbytes, "tensor data"), dtype="<f8")
            params.append(data.reshape(dims).astype(np.float64))
        trailing = fh.read(1)
        if trailing:
            raise ValueError("trailing bytes after final tensor")
    return QNetwork(cfg, params), gs
