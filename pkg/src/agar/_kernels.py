"""Compiled loops behind :func:`agar.tensor.edge_max`.

Shapes are flattened by the caller: ``M`` targets, ``K`` edges per target,
``S`` table rows, ``C`` output channels, ``G`` geometric inputs per edge.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def edge_max_forward(node, table, index, geo, w_geo, tag, w_tag):
    M, C = node.shape
    K = index.shape[1]
    G = geo.shape[2]
    has_table = table.shape[0] > 0
    has_tag = tag.shape[0] > 0
    out = np.empty((M, C))
    arg = np.zeros((M, C), dtype=np.int64)
    for i in range(M):
        for c in range(K):
            j = index[i, c]
            t = tag[c] if has_tag else 0.0
            for w in range(C):
                v = node[i, w]
                if has_table:
                    v += table[j, w]
                for d in range(G):
                    v += geo[i, c, d] * w_geo[d, w]
                if has_tag:
                    v += t * w_tag[w]
                # strict comparison keeps the first maximiser
                if c == 0 or v > out[i, w]:
                    out[i, w] = v
                    arg[i, w] = c
    return out, arg


@numba.njit(cache=True)
def edge_max_backward(g, arg, index, geo, tag, n_table):
    M, C = g.shape
    G = geo.shape[2]
    g_table = np.zeros((n_table, C))
    g_geo = np.zeros((G, C))
    g_tag = np.zeros(C)
    has_table = n_table > 0
    has_tag = tag.shape[0] > 0
    for i in range(M):
        for w in range(C):
            c = arg[i, w]
            gv = g[i, w]
            if has_table:
                g_table[index[i, c], w] += gv
            for d in range(G):
                g_geo[d, w] += geo[i, c, d] * gv
            if has_tag:
                g_tag[w] += tag[c] * gv
    return g_table, g_geo, g_tag


@numba.njit(cache=True)
def k_smallest(d, k):
    """Per row of ``d``: the ``k`` smallest columns ordered by (value, column)."""
    R, M = d.shape
    out = np.empty((R, k), dtype=np.int64)
    best = np.empty(k)
    for r in range(R):
        n = 0
        for j in range(M):
            v = d[r, j]
            if n == k and not v < best[k - 1]:
                continue
            # insert after every kept entry with value <= v (stable)
            pos = n if n < k else k - 1
            while pos > 0 and best[pos - 1] > v:
                if pos < k:
                    best[pos] = best[pos - 1]
                    out[r, pos] = out[r, pos - 1]
                pos -= 1
            best[pos] = v
            out[r, pos] = j
            if n < k:
                n += 1
    return out
