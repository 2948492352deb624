"""Run configuration: architecture, ablation switches and optimiser settings."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

ACTIVATION_KINDS = ("relu", "sigmoid", "identity")
FUSION_MODES = ("classic", "adaptive")


@dataclass
class RunConfig:
    """Everything needed to rebuild a model and replay a run.

    ``k`` is per level and per direction: a level with ``k = 8`` links each
    point to 8 present-frame and 8 past-frame neighbours.
    """

    levels: int = 3
    k: list[int] = field(default_factory=lambda: [8, 8, 8])
    ssgnn_k: int = 8
    downsample: int = 2
    sample_first_level: bool = False
    ssgnn_widths: list[int] = field(default_factory=lambda: [64, 128, 128])
    dynamic_width: int = 128
    hidden_activation: str = "relu"
    attention_activation: str = "sigmoid"
    fusion: str = "adaptive"
    no_spatial_features: bool = False
    temporal_only_graph: bool = False
    message_uses_source_feature: bool = False
    lr: float = 1e-4
    clip: float = 5.0
    iterations: int = 500_000
    batch_size: int = 16
    seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        if isinstance(self.k, int) and not isinstance(self.k, bool):
            self.k = [self.k] * self.levels if isinstance(self.levels, int) else [self.k]
        self.k = list(self.k)
        self.ssgnn_widths = list(self.ssgnn_widths)
        self.validate()

    def validate(self) -> "RunConfig":
        def need(cond, key, msg):
            if not cond:
                raise ConfigError(f"{key}: {msg}")

        for key in ("levels", "ssgnn_k", "downsample", "dynamic_width", "iterations", "batch_size", "seed", "log_every"):
            val = getattr(self, key)
            need(isinstance(val, int) and not isinstance(val, bool), key, f"expected integer, got {val!r}")
        for key in ("sample_first_level", "no_spatial_features", "temporal_only_graph", "message_uses_source_feature"):
            need(isinstance(getattr(self, key), bool), key, "expected true/false")
        need(self.levels >= 1, "levels", "must be >= 1")
        need(len(self.k) == self.levels, "k", f"needs {self.levels} entries, got {len(self.k)}")
        need(all(isinstance(v, int) and v >= 1 for v in self.k), "k", "entries must be integers >= 1")
        need(self.ssgnn_k >= 1, "ssgnn_k", "must be >= 1")
        need(self.downsample >= 1, "downsample", "must be >= 1")
        need(len(self.ssgnn_widths) >= 1 and all(isinstance(w, int) and w >= 1 for w in self.ssgnn_widths),
             "ssgnn_widths", "needs positive integers")
        need(self.dynamic_width >= 1, "dynamic_width", "must be >= 1")
        need(self.hidden_activation in ACTIVATION_KINDS, "hidden_activation", f"one of {ACTIVATION_KINDS}")
        need(self.attention_activation in ACTIVATION_KINDS, "attention_activation", f"one of {ACTIVATION_KINDS}")
        need(self.fusion in FUSION_MODES, "fusion", f"one of {FUSION_MODES}")
        need(isinstance(self.lr, (int, float)) and self.lr > 0, "lr", "must be > 0")
        need(isinstance(self.clip, (int, float)) and self.clip > 0, "clip", "must be > 0")
        need(self.iterations >= 0, "iterations", "must be >= 0")
        need(self.batch_size >= 1, "batch_size", "must be >= 1")
        need(self.log_every >= 1, "log_every", "must be >= 1")
        return self

    def level_sizes(self, n_points: int) -> list[int]:
        """Point count at each level for an ``n_points`` input cloud."""
        sizes = []
        n = n_points
        for level in range(self.levels):
            if level > 0 or self.sample_first_level:
                n = n // self.downsample
            if n < 1:
                raise ConfigError(f"downsample: level {level + 1} would have no points")
            sizes.append(n)
        return sizes

    @property
    def spatial_width(self) -> int:
        return self.ssgnn_widths[-1]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, overrides: list[str] | dict) -> "RunConfig":
        changes = overrides if isinstance(overrides, dict) else parse_overrides(overrides)
        data = self.to_dict()
        data.update(changes)
        levels = data["levels"]
        if "k" not in changes and isinstance(levels, int) and len(data["k"]) != levels:
            # changing the depth alone keeps the neighbourhood size
            data["k"] = [data["k"][0]] * data["levels"]
        return RunConfig.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"{path}: config file not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data)


def parse_overrides(items: list[str]) -> dict:
    """``["k=4", "fusion=classic"]`` -> ``{"k": 4, "fusion": "classic"}``.

    Values are parsed as JSON when possible and kept as strings otherwise.
    """
    known = {f.name for f in dataclasses.fields(RunConfig)}
    out = {}
    for item in items:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not key=value")
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def full_config(**kw) -> RunConfig:
    """Full-size architecture and optimiser settings."""
    return RunConfig(**kw)


def desk_config(**kw) -> RunConfig:
    """Widths shrunk 4x and a short schedule, sized for a single CPU core."""
    base = dict(
        ssgnn_widths=[16, 32, 32],
        dynamic_width=32,
        k=[4, 4, 4],
        ssgnn_k=8,
        iterations=2000,
        batch_size=4,
        lr=2e-3,
    )
    base.update(kw)
    if "levels" in kw and "k" not in kw:
        base["k"] = [4] * kw["levels"]
    return RunConfig(**base)
