"""Self-checks that exercise the whole differentiable pipeline on a tiny problem."""

from __future__ import annotations

import numpy as np

from . import metrics
from . import tensor as tn
from .config import RunConfig
from .model import AgarModel

TOY_POINTS = 8
TOY_FRAMES = 3


def toy_config(**overrides) -> RunConfig:
    """Two-level adaptive model small enough for exhaustive finite differences."""
    base = dict(
        levels=2,
        k=[2, 2],
        ssgnn_k=3,
        downsample=2,
        ssgnn_widths=[4, 5, 5],
        dynamic_width=4,
        fusion="adaptive",
        iterations=0,
        batch_size=1,
    )
    base.update(overrides)
    return RunConfig(**base)


def toy_sequence(seed: int = 0) -> np.ndarray:
    """``(3, 8, 3)`` frames: a random cloud drifting and slightly deforming."""
    rng = np.random.default_rng(seed)
    start = rng.uniform(-1.0, 1.0, size=(TOY_POINTS, 3))
    drift = rng.normal(scale=0.1, size=3)
    return np.stack([start + t * drift + rng.normal(scale=0.02, size=start.shape) for t in range(TOY_FRAMES)])


def sequence_loss(model: AgarModel, frames: np.ndarray) -> tn.Tensor:
    """Teacher-forced chamfer + EMD over all predicted frames, averaged."""
    states = model.initial_states()
    total = None
    for t in range(frames.shape[0] - 1):
        out = model.step(frames[t], states)
        states = out.states
        term = metrics.combined_loss(out.prediction, frames[t + 1])
        total = term if total is None else tn.add(total, term)
    return tn.mul(total, 1.0 / (frames.shape[0] - 1))


def toy_grad_check(config: RunConfig | None = None, seed: int = 0, samples: int = 64, h: float = 1e-5) -> float:
    """Max relative error of reverse-mode vs central differences on the toy."""
    config = config or toy_config(seed=seed)
    model = AgarModel(config)
    frames = toy_sequence(seed)
    return tn.grad_check(lambda: sequence_loss(model, frames), model.params, h=h, samples=samples, seed=seed)
