"""Slow, obviously-correct reference implementations used by the tests.

Nothing here imports the package's kernels: distances are summed in plain
Python, sorts use tuples, EMD enumerates permutations.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def matmul(a, b):
    n, k = len(a), len(b)
    m = len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i][t] * b[t][j]
            out[i][j] = s
    return np.array(out)


def sq_dist(p, q) -> float:
    # left-to-right accumulation, same association as the package
    s = 0.0
    for a, b in zip(p, q):
        d = float(a) - float(b)
        s = s + d * d
    return s


def knn(query, reference, k, include_self=True):
    out = []
    for i, q in enumerate(query):
        cands = [(sq_dist(q, r), j) for j, r in enumerate(reference) if include_self or j != i]
        cands.sort()
        out.append([j for _, j in cands[:k]])
    return np.array(out, dtype=np.intp)


def fps(points, m):
    n = len(points)
    chosen = [0]
    while len(chosen) < m:
        best_j, best_d = None, -1.0
        for j in range(n):
            if j in chosen:
                continue
            d = min(sq_dist(points[j], points[c]) for c in chosen)
            if d > best_d:
                best_j, best_d = j, d
        chosen.append(best_j)
    return np.array(chosen, dtype=np.intp)


def emd_bruteforce(p, q) -> float:
    n = len(p)
    costs = [[sq_dist(p[i], q[j]) for j in range(n)] for i in range(n)]
    return min(sum(costs[i][perm[i]] for i in range(n)) for perm in itertools.permutations(range(n)))


def chamfer(p, q) -> float:
    fwd = sum(min(sq_dist(a, b) for b in q) for a in p) / len(p)
    bwd = sum(min(sq_dist(b, a) for a in p) for b in q) / len(q)
    return fwd + bwd


def cd_top5(p, q) -> float:
    pooled = [min(sq_dist(a, b) for b in q) for a in p] + [min(sq_dist(b, a) for a in p) for b in q]
    m = math.ceil(0.05 * len(pooled))
    return sum(sorted(pooled)[-m:]) / m


def interpolate(targets, sources, feats):
    out = []
    for t in targets:
        near = sorted((sq_dist(t, s), j) for j, s in enumerate(sources))[:3]
        hits = [j for d, j in near if math.sqrt(d) < 1e-10]
        if hits:
            out.append(np.asarray(feats[hits[0]], dtype=float))
            continue
        w = [1.0 / d for d, _ in near]
        tot = sum(w)
        out.append(sum(wi / tot * np.asarray(feats[j], dtype=float) for wi, (_, j) in zip(w, near)))
    return np.array(out)


def relu(v):
    return np.maximum(v, 0.0)


def edge_layer(inputs_per_edge, W, b, act=lambda v: v):
    """Max over edges of ``act(concat(edge inputs) @ W + b)``, one target at a time.

    ``inputs_per_edge[i]`` is a list of 1-D input vectors (already
    concatenated) for the edges of target ``i``.
    """
    out = []
    for edges in inputs_per_edge:
        msgs = [act(matmul([list(e)], W.tolist())[0] + b) for e in edges]
        out.append(np.max(np.array(msgs), axis=0))
    return np.array(out)
