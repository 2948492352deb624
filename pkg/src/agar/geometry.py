"""Brute-force spatial kernels: k-NN, farthest-point sampling, 3-NN interpolation.

All kernels accept either a single point set ``(N, d)`` or a batch
``(B, N, d)``. Distances are computed exhaustively; at the sizes this
package targets (N <= 1024) that is both the simplest and fast enough.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as tn
from .errors import CountError, DimensionError, EmptyReferenceError

PRESENT, PAST = 0, 1
EXACT_HIT = 1e-10


@dataclass
class PointSet:
    coords: np.ndarray
    features: np.ndarray | None = None

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if not np.all(np.isfinite(self.coords)):
            raise DimensionError("point coordinates must be finite")
        if self.features is not None and np.shape(self.features)[-2] != self.coords.shape[-2]:
            raise DimensionError("feature rows must match point count")

    def __len__(self) -> int:
        return self.coords.shape[-2]


@dataclass
class EdgeSet:
    """Directed edges ``target i <- source j`` stored as a dense index block.

    ``sources[..., i, c]`` is the source of the ``c``-th edge of target ``i``
    and ``tags[c]`` says whether column ``c`` points into the present or the
    past frame. Present columns always come first.
    """

    sources: np.ndarray
    tags: np.ndarray
    delta_p: np.ndarray
    delta_s: "tn.Tensor | None" = None
    delta_t: np.ndarray = field(init=False)

    def __post_init__(self):
        self.tags = np.asarray(self.tags, dtype=np.int8)
        self.delta_t = self.tags.astype(np.float64)

    @property
    def k_present(self) -> int:
        return int(np.sum(self.tags == PRESENT))

    @property
    def k_past(self) -> int:
        return int(np.sum(self.tags == PAST))

    @property
    def present(self) -> np.ndarray:
        return self.sources[..., : self.k_present]

    @property
    def past(self) -> np.ndarray:
        return self.sources[..., self.k_present :]

    def out_degree(self) -> int:
        return self.sources.shape[-1]

    def edge_list(self) -> list[tuple[int, int, int]]:
        """``(target, source, tag)`` triples for an unbatched edge set."""
        if self.sources.ndim != 2:
            raise DimensionError("edge_list() needs an unbatched edge set")
        return [
            (i, int(j), int(self.tags[c]))
            for i, row in enumerate(self.sources)
            for c, j in enumerate(row)
        ]


def _batched(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None], True
    if x.ndim == 3:
        return x, False
    raise DimensionError(f"expected (N, d) or (B, N, d), got {x.shape}")


def sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances ``(..., n, m)``.

    Low-dimensional inputs (coordinates) use explicit differences so the
    result is exactly translation-consistent; wide feature vectors use the
    Gram expansion, clamped at zero.
    """
    if a.shape[-1] <= 3:
        # accumulate coordinate by coordinate: same rounding as summing the
        # squared difference vector left to right, without the (n, m, d) block
        out = None
        for c in range(a.shape[-1]):
            diff = a[..., :, None, c] - b[..., None, :, c]
            sq = diff * diff
            out = sq if out is None else out + sq
        if out is None:
            out = np.zeros(a.shape[:-1] + b.shape[-2:-1])
        return out
    aa = np.einsum("...d,...d->...", a, a)[..., :, None]
    bb = np.einsum("...d,...d->...", b, b)[..., None, :]
    return np.maximum(aa + bb - 2.0 * (a @ np.swapaxes(b, -1, -2)), 0.0)


def knn_indices(query: np.ndarray, reference: np.ndarray, k: int, include_self: bool = True) -> np.ndarray:
    """Indices of the ``k`` nearest reference rows per query row.

    Ties go to the lower reference index. ``include_self=False`` requires
    query and reference to be the same set and drops the diagonal. ``k`` is
    clamped to the number of candidates.
    """
    if k < 1:
        raise CountError(f"k must be >= 1, got {k}")
    q, squeeze = _batched(query)
    r, _ = _batched(reference)
    if r.shape[-2] == 0:
        raise EmptyReferenceError("k-NN against an empty reference set")
    if q.shape[-1] != r.shape[-1]:
        raise DimensionError(f"query width {q.shape[-1]} != reference width {r.shape[-1]}")
    d = sq_dists(q, r)
    n_cand = r.shape[-2]
    if not include_self:
        if q.shape[-2] != r.shape[-2]:
            raise DimensionError("include_self=False needs query == reference")
        d = d.copy()
        diag = np.arange(q.shape[-2])
        d[:, diag, diag] = np.inf
        n_cand -= 1
        if n_cand == 0:
            raise EmptyReferenceError("no neighbours besides self")
    k = min(k, n_cand)
    idx = _k_smallest(d, k)
    return idx[0] if squeeze else idx


def _k_smallest(d: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the ``k`` smallest entries per row, ordered by
    (value, index): a stable full sort truncated at ``k``."""
    from . import _kernels

    if np.isnan(d).any():
        return np.argsort(d, axis=-1, kind="stable")[..., :k]
    flat = np.ascontiguousarray(d.reshape(-1, d.shape[-1]))
    return _kernels.k_smallest(flat, k).reshape(d.shape[:-1] + (k,))


def _coords_of(x) -> np.ndarray:
    return x.coords if isinstance(x, PointSet) else np.asarray(x, dtype=np.float64)


def _metric_space(x, metric: str) -> np.ndarray:
    if metric == "coords":
        return _coords_of(x)
    if metric == "features":
        feats = x.features if isinstance(x, PointSet) else None
        if feats is None:
            raise DimensionError("metric='features' needs feature matrices on both sides")
        return np.asarray(feats.data if isinstance(feats, tn.Tensor) else feats, dtype=np.float64)
    raise ValueError(f"unknown metric {metric!r}")


def gather_rows(x: np.ndarray, index: np.ndarray) -> np.ndarray:
    """Numpy twin of :func:`agar.tensor.gather` for constant arrays."""
    if x.ndim == 2:
        return x[index]
    b = np.arange(x.shape[0]).reshape((-1,) + (1,) * (index.ndim - 1))
    return x[b, index]


def knn(query, reference, k: int, metric: str = "coords", include_self: bool = True) -> EdgeSet:
    """k-NN edges from ``query`` targets to ``reference`` sources (present tag).

    ``query``/``reference`` are :class:`PointSet` objects or coordinate arrays.
    """
    idx = knn_indices(_metric_space(query, metric), _metric_space(reference, metric), k, include_self)
    qc, rc = _coords_of(query), _coords_of(reference)
    dp = gather_rows(rc, idx) - qc[..., :, None, :]
    return EdgeSet(idx, np.full(idx.shape[-1], PRESENT), dp)


def farthest_point_sample(points, m: int) -> np.ndarray:
    """Greedy maximin subset of size ``m`` in selection order, seeded at index 0."""
    coords, squeeze = _batched(_coords_of(points))
    B, N, _ = coords.shape
    if not 1 <= m <= N:
        raise CountError(f"cannot sample {m} of {N} points")
    out = np.empty((B, m), dtype=np.intp)
    best = np.full((B, N), np.inf)
    rows = np.arange(B)
    cur = np.zeros(B, dtype=np.intp)
    for s in range(m):
        out[:, s] = cur
        diff = coords - coords[rows, cur][:, None, :]
        best = np.minimum(best, np.einsum("bnd,bnd->bn", diff, diff))
        best[rows, cur] = -1.0  # never re-pick a selected point
        cur = np.argmax(best, axis=1)
    return out[0] if squeeze else out


def interpolation_weights(targets, sources, k: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Inverse-squared-distance weights over the 3 nearest sources.

    Returns ``(index, weight)`` both shaped ``(..., N_t, min(k, N_s))``;
    weights are nonnegative and sum to one per target. A source closer than
    ``1e-10`` takes the full weight.
    """
    t, squeeze = _batched(_coords_of(targets))
    s, _ = _batched(_coords_of(sources))
    if s.shape[-2] == 0:
        raise EmptyReferenceError("interpolation from an empty source set")
    idx = knn_indices(t, s, k)
    d2 = np.einsum("...d,...d->...", gather_rows(s, idx) - t[..., :, None, :], gather_rows(s, idx) - t[..., :, None, :])
    hit = d2 < EXACT_HIT**2
    any_hit = hit.any(axis=-1, keepdims=True)
    with np.errstate(divide="ignore"):
        inv = np.where(any_hit, 0.0, 1.0 / np.where(hit, 1.0, d2))
    first_hit = np.zeros_like(hit)
    np.put_along_axis(first_hit, np.argmax(hit, axis=-1)[..., None], True, axis=-1)
    inv = np.where(any_hit, (first_hit & hit).astype(np.float64), inv)
    w = inv / inv.sum(axis=-1, keepdims=True)
    if squeeze:
        return idx[0], w[0]
    return idx, w


def interpolate(targets, sources, source_feats, weights=None) -> "tn.Tensor":
    """Spread ``source_feats`` (array or Tensor) onto ``targets`` by 3-NN weighting.

    ``weights`` takes a precomputed ``interpolation_weights(targets, sources)``.
    """
    idx, w = weights if weights is not None else interpolation_weights(targets, sources)
    feats = tn.as_tensor(source_feats)
    picked = tn.gather(feats, idx)
    return tn.sum(tn.mul(picked, w[..., None]), axis=-2)
