"""Line-oriented ``key=value`` configuration files.

Blank lines and ``#`` comments are ignored. List-valued keys are given by
repeating the key::

    depth = 7
    depth = 8
    d = 16
    mode = FullSet
    repetitions = 3
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .training import FULLSET, SUBSET, TrainConfig

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_key_values",
    "load_train_config",
    "load_experiment_config",
    "config_hash",
]

_TRAIN_FIELDS = {f.name: f for f in dataclasses.fields(TrainConfig)}
# per-cell values come from the experiment grid, not from the file
_GRID_OWNED = {"d", "mode", "seed"}


class ConfigError(ValueError):
    pass


def parse_key_values(text: str, source: str = "<config>") -> list[tuple[str, str, int]]:
    items = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        items.append((key, value, lineno))
    return items


def _coerce(name: str, value: str, source: str, lineno: int):
    f = _TRAIN_FIELDS[name]
    kind = str(f.type)
    try:
        if "bool" in kind:
            lowered = value.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return lowered in ("true", "1", "yes")
        if "float" in kind:
            if value.lower() in ("none", ""):
                return None
            return float(value)
        if "int" in kind:
            return int(value)
        return value
    except ValueError:
        raise ConfigError(f"{source}:{lineno}: bad value {value!r} for {name}") from None


def _train_overrides(items, source, allowed) -> dict:
    overrides = {}
    for key, value, lineno in items:
        if key not in allowed:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in overrides:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        overrides[key] = _coerce(key, value, source, lineno)
    return overrides


def load_train_config(path) -> TrainConfig:
    text = Path(path).read_text(encoding="utf-8")
    overrides = _train_overrides(parse_key_values(text, str(path)), str(path), set(_TRAIN_FIELDS))
    try:
        return TrainConfig(**overrides)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


@dataclass
class ExperimentConfig:
    depths: list[int] = field(default_factory=list)
    edges: str | None = None
    d_values: list[int] = field(default_factory=lambda: [50])
    modes: list[str] = field(default_factory=lambda: [FULLSET, SUBSET])
    repetitions: int = 5
    seed: int = 0
    out: str = "results"
    ec_cap: int = 10_000_000
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if not self.depths and not self.edges:
            raise ConfigError("config needs at least one data source (depth or edges)")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.d_values:
            raise ConfigError("config needs at least one d value")
        for mode in self.modes:
            if mode not in (FULLSET, SUBSET):
                raise ConfigError(f"unknown mode {mode!r}")
        if any(depth < 1 for depth in self.depths) or any(d < 1 for d in self.d_values):
            raise ConfigError("depth and d values must be positive")

    def train_config(self, d: int, mode: str, seed: int) -> TrainConfig:
        return self.train.with_(d=d, mode=mode, seed=seed)

    def seeds(self) -> list[int]:
        return [self.seed + k for k in range(self.repetitions)]

    def as_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["train"] = self.train.as_dict()
        return data


def load_experiment_config(path) -> ExperimentConfig:
    source = str(path)
    items = parse_key_values(Path(path).read_text(encoding="utf-8"), source)
    lists = {"depth": [], "d": [], "mode": []}
    scalars = {}
    train_items = []
    for key, value, lineno in items:
        if key in lists:
            lists[key].append((value, lineno))
        elif key in ("edges", "repetitions", "seed", "out", "ec_cap"):
            if key in scalars:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            scalars[key] = (value, lineno)
        elif key in _TRAIN_FIELDS and key not in _GRID_OWNED:
            train_items.append((key, value, lineno))
        else:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")

    def ints(name):
        try:
            return [int(v) for v, _ in lists[name]]
        except ValueError:
            raise ConfigError(f"{source}: {name} values must be integers") from None

    kwargs = {}
    if lists["depth"]:
        kwargs["depths"] = ints("depth")
    if lists["d"]:
        kwargs["d_values"] = ints("d")
    if lists["mode"]:
        kwargs["modes"] = [_canonical_mode(v, source, n) for v, n in lists["mode"]]
    for key, (value, lineno) in scalars.items():
        try:
            kwargs[key] = int(value) if key in ("repetitions", "seed", "ec_cap") else value
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: {key} must be an integer") from None
    if "edges" in kwargs:
        edges = Path(kwargs["edges"])
        if not edges.is_absolute():
            kwargs["edges"] = str(Path(path).parent / edges)
    try:
        kwargs["train"] = TrainConfig(**_train_overrides(train_items, source, set(_TRAIN_FIELDS)))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from None
    return ExperimentConfig(**kwargs)


def _canonical_mode(value: str, source: str, lineno: int) -> str:
    for mode in (FULLSET, SUBSET):
        if value.lower() == mode.lower():
            return mode
    raise ConfigError(f"{source}:{lineno}: unknown mode {value!r}")


def config_hash(config: ExperimentConfig) -> str:
    """Short stable digest of everything that affects results (not the output path)."""
    data = config.as_dict()
    data.pop("out")
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]
