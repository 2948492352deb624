"""Chamfer distance, exact EMD, the combined training loss and CD Top 5%.

Every function works on a single cloud ``(N, 3)`` or a batch ``(B, N, 3)``
and returns one value per cloud. The differentiable versions take the
nearest-neighbour / optimal-assignment choice from the forward pass and
treat it as fixed when differentiating.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import tensor as tn
from .errors import CardinalityError, EmptyReferenceError, NumericError, ScaleError
from .geometry import sq_dists

EMD_MAX_POINTS = 512
TOP_FRACTION = 0.05


def _data(x) -> np.ndarray:
    return x.data if isinstance(x, tn.Tensor) else np.asarray(x, dtype=np.float64)


def _check_nonempty(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape[-2] == 0 or q.shape[-2] == 0:
        raise EmptyReferenceError("distance between empty point clouds")


def _sq_norm(x: tn.Tensor) -> tn.Tensor:
    return tn.sum(tn.square(x), axis=-1)


def chamfer_terms(p, q) -> tuple[np.ndarray, np.ndarray]:
    """Per-point squared nearest distances ``p -> q`` and ``q -> p``."""
    p, q = _data(p), _data(q)
    _check_nonempty(p, q)
    d = sq_dists(p, q)
    return d.min(axis=-1), d.min(axis=-2)


def chamfer(p, q, cost: np.ndarray | None = None) -> tn.Tensor:
    """Mean squared nearest distance in both directions, summed.

    ``cost`` may pass in an already computed ``sq_dists(p, q)``.
    """
    pd, qd = _data(p), _data(q)
    _check_nonempty(pd, qd)
    d = sq_dists(pd, qd) if cost is None else cost
    nn_pq = np.argmin(d, axis=-1)
    nn_qp = np.argmin(d, axis=-2)
    p, q = tn.as_tensor(p), tn.as_tensor(q)
    fwd = tn.mean(_sq_norm(tn.sub(p, tn.gather(q, nn_pq))), axis=-1)
    bwd = tn.mean(_sq_norm(tn.sub(q, tn.gather(p, nn_qp))), axis=-1)
    return tn.add(fwd, bwd)


def cost_matrix(p, q) -> np.ndarray:
    return sq_dists(_data(p), _data(q))


def solve_assignment(cost: np.ndarray) -> np.ndarray:
    """Optimal permutation ``perm`` minimising ``sum_i cost[i, perm[i]]``."""
    if not np.all(np.isfinite(cost)):
        raise NumericError("assignment cost contains NaN or Inf")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=np.intp)
    perm[rows] = cols
    return perm


def emd_assignment(p, q, cost: np.ndarray | None = None) -> np.ndarray:
    pd, qd = _data(p), _data(q)
    if pd.shape[-2] != qd.shape[-2]:
        raise CardinalityError(f"EMD needs equal sizes, got {pd.shape[-2]} and {qd.shape[-2]}")
    if pd.shape[-2] > EMD_MAX_POINTS:
        raise ScaleError(f"exact EMD limited to {EMD_MAX_POINTS} points, got {pd.shape[-2]}")
    _check_nonempty(pd, qd)
    if cost is None:
        cost = cost_matrix(pd, qd)
    if cost.ndim == 2:
        return solve_assignment(cost)
    return np.stack([solve_assignment(c) for c in cost])


def emd_exact(p, q, cost: np.ndarray | None = None) -> tuple[tn.Tensor, np.ndarray]:
    """Minimum total squared distance over bijections, with the bijection."""
    perm = emd_assignment(p, q, cost)
    diff = tn.sub(tn.as_tensor(p), tn.gather(tn.as_tensor(q), perm))
    return tn.sum(_sq_norm(diff), axis=-1), perm


def emd(p, q) -> tn.Tensor:
    return emd_exact(p, q)[0]


def loss_terms(pred, target) -> tuple[tn.Tensor, tn.Tensor]:
    """``(chamfer, emd)`` sharing one distance matrix."""
    cost = cost_matrix(pred, target)
    return chamfer(pred, target, cost), emd_exact(pred, target, cost)[0]


def combined_loss(pred, target) -> tn.Tensor:
    """Chamfer plus EMD, one value per cloud."""
    return tn.add(*loss_terms(pred, target))


def top_fraction_mean(values: np.ndarray, fraction: float = TOP_FRACTION) -> np.ndarray:
    """Mean of the largest ``ceil(fraction * n)`` entries along the last axis."""
    n = values.shape[-1]
    m = max(1, math.ceil(fraction * n - 1e-12))
    part = np.sort(values, axis=-1)[..., n - m :]
    return part.mean(axis=-1)


def cd_top5(pred, target) -> np.ndarray:
    """Mean of the worst 5% of pooled directional nearest distances."""
    a, b = chamfer_terms(pred, target)
    return top_fraction_mean(np.concatenate([a, b], axis=-1))


@dataclass
class MetricReport:
    cd: float
    emd: float
    cd_top5: float
    per_point_distances: np.ndarray | None = None


def evaluate_pair(pred, target) -> MetricReport:
    """All three metrics for one predicted cloud against its target."""
    pred, target = _data(pred), _data(target)
    a, b = chamfer_terms(pred, target)
    pooled = np.concatenate([a, b])
    return MetricReport(
        cd=float(a.mean() + b.mean()),
        emd=float(emd(pred, target).data),
        cd_top5=float(top_fraction_mean(pooled)),
        per_point_distances=pooled,
    )


METRIC_COLUMNS = ("sequence", "frame", "cd", "emd", "cd_top5")


def write_metrics_csv(path, rows, emd_scale: float = 1.0) -> None:
    """Rows are ``(sequence_id, frame, MetricReport)``; EMD is multiplied by ``emd_scale``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRIC_COLUMNS)
        for seq, t, rep in rows:
            w.writerow([seq, t, repr(rep.cd), repr(rep.emd * emd_scale), repr(rep.cd_top5)])
