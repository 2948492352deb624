"""Teacher-forced training and the short-/long-term evaluation protocols."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from . import tensor as tn
from .config import RunConfig
from .data import Sequence
from .errors import CheckpointError, FormatError, NumericError
from .metrics import MetricReport
from .model import AgarModel, FrameGeometry

CURVE_COLUMNS = ("iteration", "loss", "cd", "emd")
CHECKPOINT_NAME = "checkpoint.agar"
CONFIG_NAME = "config.json"
CURVE_NAME = "loss_curve.csv"


def stack_frames(seqs: list[Sequence]) -> np.ndarray:
    """``(S, T, N, 3)`` array; all sequences must share ``T`` and ``N``."""
    if not seqs:
        raise FormatError("no sequences given")
    shapes = {s.frames.shape for s in seqs}
    if len(shapes) != 1:
        raise FormatError(f"sequences differ in shape: {sorted(shapes)}")
    return np.stack([s.frames for s in seqs])


@dataclass
class CurveRow:
    iteration: int
    loss: float
    cd: float
    emd: float


class Trainer:
    """Mini-batch BPTT over whole sequences with Adam.

    Each iteration samples ``batch_size`` sequences, starts from fresh
    states, feeds ground-truth frames ``0 .. T-2`` and scores the
    predictions of frames ``1 .. T-1`` with chamfer + EMD. The loss is the
    per-sequence mean over predicted frames, averaged over the batch.
    """

    def __init__(self, config: RunConfig, sequences: list[Sequence], model: AgarModel | None = None):
        config.validate()
        self.config = config
        self.model = model if model is not None else AgarModel(config)
        self.opt = tn.Adam(self.model.params, lr=config.lr, clip=config.clip)
        self.frames = stack_frames(sequences)
        # batch order has its own stream so it does not shift weight init
        self.rng = np.random.default_rng([config.seed, 1])
        self.iteration = 0
        self.curve: list[CurveRow] = []
        self._geometry: dict[tuple[int, int], FrameGeometry] = {}

    def _frame_geometry(self, s: int, t: int) -> FrameGeometry:
        key = (s, t)
        if key not in self._geometry:
            self._geometry[key] = self.model.geometry(self.frames[s, t])
        return self._geometry[key]

    def sample_batch(self) -> np.ndarray:
        n = self.frames.shape[0]
        return self.rng.choice(n, size=self.config.batch_size, replace=n < self.config.batch_size)

    def batch_loss(self, idx: np.ndarray) -> tuple[tn.Tensor, float, float]:
        X = self.frames[idx]
        steps = X.shape[1] - 1
        states = self.model.initial_states()
        cd_sum = emd_sum = None
        for t in range(steps):
            geo = FrameGeometry.stack([self._frame_geometry(int(s), t) for s in idx])
            out = self.model.step(X[:, t], states, geometry=geo)
            states = out.states
            cd, emd = metrics.loss_terms(out.prediction, X[:, t + 1])
            cd_sum = cd if cd_sum is None else tn.add(cd_sum, cd)
            emd_sum = emd if emd_sum is None else tn.add(emd_sum, emd)
        loss = tn.mean(tn.mul(tn.add(cd_sum, emd_sum), 1.0 / steps))
        return loss, float(cd_sum.data.mean() / steps), float(emd_sum.data.mean() / steps)

    def step(self) -> CurveRow:
        """One optimiser update. Raises :class:`NumericError` before touching
        the weights if the loss or any gradient is not finite."""
        idx = self.sample_batch()
        loss, cd, emd = self.batch_loss(idx)
        value = float(loss.data)
        if not np.isfinite(value):
            raise NumericError(f"non-finite loss at iteration {self.iteration + 1}")
        self.model.params.zero_grad()
        loss.backward()
        try:
            self.opt.step()
        except NumericError as exc:
            raise NumericError(f"{exc} at iteration {self.iteration + 1}") from None
        self.iteration += 1
        return CurveRow(self.iteration, value, cd, emd)

    def run(self, iterations: int | None = None, run_dir=None, progress=None) -> list[CurveRow]:
        """Train and record the curve every ``log_every`` iterations (and at
        the first and last one). With ``run_dir`` the config, checkpoint and
        curve are written there, also when training aborts on a numeric
        failure (the checkpoint then holds the last finite weights)."""
        total = self.config.iterations if iterations is None else iterations
        started = time.perf_counter()
        try:
            for _ in range(total):
                row = self.step()
                i = row.iteration
                if i == 1 or i % self.config.log_every == 0 or i == total:
                    self.curve.append(row)
                    if progress is not None:
                        progress(row)
        finally:
            if run_dir is not None:
                self.save(run_dir, wall_time=time.perf_counter() - started)
        return self.curve

    def save(self, run_dir, wall_time: float | None = None) -> Path:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        self.config.save(run_dir / CONFIG_NAME)
        tn.save_checkpoint(run_dir / CHECKPOINT_NAME, self.model.params)
        write_curve(run_dir / CURVE_NAME, self.curve)
        summary = {
            "seed": self.config.seed,
            "iterations": self.iteration,
            "final_loss": self.curve[-1].loss if self.curve else None,
            "wall_time_s": wall_time,
        }
        (run_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        return run_dir


def train(config: RunConfig, sequences: list[Sequence], run_dir=None, progress=None) -> Trainer:
    """Build a model from ``config`` and train it for ``config.iterations`` steps."""
    trainer = Trainer(config, sequences)
    trainer.run(run_dir=run_dir, progress=progress)
    return trainer


def write_curve(path, rows: list[CurveRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_COLUMNS)
        for r in rows:
            w.writerow([r.iteration, repr(r.loss), repr(r.cd), repr(r.emd)])


def read_curve(path) -> list[CurveRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [CurveRow(int(r["iteration"]), float(r["loss"]), float(r["cd"]), float(r["emd"])) for r in reader]


def load_model(path, config: RunConfig | None = None) -> AgarModel:
    """Rebuild a model from a run directory or a checkpoint file.

    Without ``config`` the ``config.json`` next to the checkpoint is used.
    Parameter names or shapes that disagree with the config raise
    :class:`CheckpointError`.
    """
    path = Path(path)
    ckpt = path / CHECKPOINT_NAME if path.is_dir() else path
    if not ckpt.is_file():
        raise CheckpointError(f"{ckpt}: checkpoint missing")
    if config is None:
        cfg_path = ckpt.parent / CONFIG_NAME
        if not cfg_path.is_file():
            raise CheckpointError(f"{cfg_path}: no config beside checkpoint")
        config = RunConfig.load(cfg_path)
    model = AgarModel(config)
    tn.load_checkpoint(ckpt, model.params)
    return model


# ----------------------------------------------------------------- evaluation


@dataclass
class EvalResult:
    """Per-frame metrics for the model and the matching copy baseline.

    Rows are ``(sequence name, frame index, MetricReport)`` with 0-based
    indices of the predicted frame. ``inputs_read`` lists, per sequence,
    which ground-truth frames were fed to the model.
    """

    mode: str
    rows: list[tuple[str, int, MetricReport]] = field(default_factory=list)
    baseline: list[tuple[str, int, MetricReport]] = field(default_factory=list)
    inputs_read: dict[str, list[int]] = field(default_factory=dict)
    predictions: dict[str, np.ndarray] = field(default_factory=dict)

    @staticmethod
    def _mean(rows) -> dict[str, float]:
        return {
            "cd": float(np.mean([r.cd for _, _, r in rows])),
            "emd": float(np.mean([r.emd for _, _, r in rows])),
            "cd_top5": float(np.mean([r.cd_top5 for _, _, r in rows])),
        }

    def summary(self) -> dict[str, dict[str, float]]:
        return {"model": self._mean(self.rows), "baseline": self._mean(self.baseline)}


class _GroundTruth:
    """Read-logging view of the test frames: tracks which frames feed the model."""

    def __init__(self, frames: np.ndarray):
        self._frames = frames
        self.read: list[int] = []

    def input(self, t: int) -> np.ndarray:
        self.read.append(t)
        return self._frames[:, t]

    def target(self, t: int) -> np.ndarray:
        return self._frames[:, t]


def _check_finite(pred: np.ndarray, t: int) -> None:
    if not np.all(np.isfinite(pred)):
        raise NumericError(f"non-finite prediction for frame {t}")


def _score(result: EvalResult, names, t: int, pred: np.ndarray, target: np.ndarray, base: np.ndarray) -> None:
    for b, name in enumerate(names):
        result.rows.append((name, t, metrics.evaluate_pair(pred[b], target[b])))
        result.baseline.append((name, t, metrics.evaluate_pair(base[b], target[b])))


def eval_short_term(model: AgarModel, sequences: list[Sequence]) -> EvalResult:
    """Teacher forcing over every sequence; baseline = copy the last input."""
    frames = stack_frames(sequences)
    names = [s.name for s in sequences]
    gt = _GroundTruth(frames)
    result = EvalResult("short")
    states = model.initial_states()
    preds = []
    with tn.no_grad():
        for t in range(frames.shape[1] - 1):
            x = gt.input(t)
            out = model.step(x, states)
            states = out.states
            pred = out.prediction.data
            _check_finite(pred, t + 1)
            preds.append(pred)
            _score(result, names, t + 1, pred, gt.target(t + 1), x)
    stacked = np.stack(preds, axis=1)
    for b, name in enumerate(names):
        result.inputs_read[name] = list(gt.read)
        result.predictions[name] = stacked[b]
    return result


def eval_long_term(model: AgarModel, sequences: list[Sequence]) -> EvalResult:
    """Ground truth for the first ``T // 2`` frames, then closed-loop rollout.

    The last ``T - T // 2`` frames are predicted, each from the previous
    prediction; the baseline repeats frame ``T // 2 - 1`` (the last
    observed one).
    """
    frames = stack_frames(sequences)
    names = [s.name for s in sequences]
    T = frames.shape[1]
    half = T // 2
    gt = _GroundTruth(frames)
    result = EvalResult("long")
    states = model.initial_states()
    preds = []
    with tn.no_grad():
        x = None
        for t in range(half):
            x = gt.input(t)
            out = model.step(x, states)
            states = out.states
        frozen = x
        pred = out.prediction.data
        for t in range(half, T):
            _check_finite(pred, t)
            preds.append(pred)
            _score(result, names, t, pred, gt.target(t), frozen)
            if t + 1 < T:
                out = model.step(pred, states)
                states = out.states
                pred = out.prediction.data
    if max(gt.read) >= half:
        raise AssertionError("rollout read ground truth past the observed half")
    stacked = np.stack(preds, axis=1)
    for b, name in enumerate(names):
        result.inputs_read[name] = list(gt.read)
        result.predictions[name] = stacked[b]
    return result
