"""Declarative run configuration: flat key=value text with one section per module.

Example (every key optional; defaults shown in DEFAULTS):

    [run]
    gate_set = clifford_t
    seed = 0
    threads = 1

    [net]
    hidden1 = 256
    hidden2 = 128
    blocks = 2
    block_width = 128

    [train]
    lr = 1e-3
    delta = 1e-2
    d_start = 3
    d_max = 8
    eps = 1e-3

    [search]
    node_budget = 10000

Unknown sections or keys are rejected with their names spelled out, as are
out-of-range values, so a typo never silently trains the wrong thing.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, fields

from .gatesets import GATE_SET_NAMES
from .qnet import NetConfig, TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class AppConfig:
    gate_set: str = "clifford_t"
    seed: int = 0
    threads: int = 1
    hidden1: int = 256
    hidden2: int = 128
    blocks: int = 2
    block_width: int = 128
    lr: float = 1e-3
    weight_decay: float = 0.0
    gamma: float = 1.0
    delta: float = 1e-2
    d_start: int = 3
    d_max: int = 8
    batch: int = 512
    transitions_per_depth: int = 20000
    target_sync_interval: int = 500
    step_budget: int = 20000
    pool_capacity: int = 1_000_000
    eps: float = 1e-3
    node_budget: int = 10000

    def net_config(self, gs) -> NetConfig:
        return NetConfig(
            input_dim=2 * gs.dim**2,
            hidden1=self.hidden1,
            hidden2=self.hidden2,
            blocks=self.blocks,
            block_width=self.block_width,
            outputs=len(gs),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            weight_decay=self.weight_decay,
            gamma=self.gamma,
            delta=self.delta,
            d_start=self.d_start,
            d_max=self.d_max,
            batch=self.batch,
            transitions_per_depth=self.transitions_per_depth,
            target_sync_interval=self.target_sync_interval,
            seed=self.seed,
            eps=self.eps,
            pool_capacity=self.pool_capacity,
            step_budget=self.step_budget,
        )


# section -> key -> (field name, parser)
_SCHEMA: dict[str, dict[str, tuple[str, type]]] = {
    "run": {"gate_set": ("gate_set", str), "seed": ("seed", int), "threads": ("threads", int)},
    "net": {
        "hidden1": ("hidden1", int),
        "hidden2": ("hidden2", int),
        "blocks": ("blocks", int),
        "block_width": ("block_width", int),
    },
    "train": {
        "lr": ("lr", float),
        "weight_decay": ("weight_decay", float),
        "gamma": ("gamma", float),
        "delta": ("delta", float),
        "d_start": ("d_start", int),
        "d_max": ("d_max", int),
        "batch": ("batch", int),
        "transitions_per_depth": ("transitions_per_depth", int),
        "target_sync_interval": ("target_sync_interval", int),
        "step_budget": ("step_budget", int),
        "pool_capacity": ("pool_capacity", int),
        "eps": ("eps", float),
    },
    "search": {"node_budget": ("node_budget", int)},
}

_FIELD_SECTION = {
    field: (section, key)
    for section, keys in _SCHEMA.items()
    for key, (field, _) in keys.items()
}


def _validate(cfg: AppConfig) -> AppConfig:
    if cfg.gate_set not in GATE_SET_NAMES:
        valid = ", ".join(GATE_SET_NAMES)
        raise ConfigError(f"run.gate_set: unknown gate set {cfg.gate_set!r}; valid names: {valid}")
    if cfg.threads < 1:
        raise ConfigError(f"run.threads must be >= 1, got {cfg.threads}")
    if cfg.d_max < cfg.d_start:
        raise ConfigError(f"train.d_max ({cfg.d_max}) must be >= train.d_start ({cfg.d_start})")
    if cfg.node_budget < 1:
        raise ConfigError(f"search.node_budget must be >= 1, got {cfg.node_budget}")
    try:
        cfg.train_config()  # reuses the training-side range checks
    except ValueError as exc:
        raise ConfigError(f"train: {exc}") from None
    for name in ("hidden1", "hidden2", "block_width"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"net.{name} must be >= 1, got {getattr(cfg, name)}")
    if cfg.blocks < 0:
        raise ConfigError(f"net.blocks must be >= 0, got {cfg.blocks}")
    return cfg


def parse_config(text: str, source: str = "<config>") -> AppConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            known = ", ".join(_SCHEMA)
            raise ConfigError(f"unknown section [{section}]; known sections: {known}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                known = ", ".join(_SCHEMA[section])
                raise ConfigError(f"unknown key {section}.{key}; known keys: {known}")
            field, typ = _SCHEMA[section][key]
            try:
                values[field] = typ(raw) if typ is not int else int(float(raw))
            except ValueError:
                raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {typ.__name__}") from None
    return _validate(AppConfig(**values))


def load_config(path) -> AppConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def dump_config(cfg: AppConfig) -> str:
    """Render a config that parses back to equal values."""
    parser = configparser.ConfigParser()
    for section in _SCHEMA:
        parser.add_section(section)
    for f in fields(cfg):
        section, key = _FIELD_SECTION[f.name]
        value = getattr(cfg, f.name)
        parser.set(section, key, repr(value) if isinstance(value, float) else str(value))
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
