"""Spatial-structure GNN: per-point spatial features from a single frame."""

from __future__ import annotations

import numpy as np

from . import tensor as tn
from .errors import DimensionError
from .geometry import EdgeSet, knn

DEFAULT_WIDTHS = (64, 128, 128)
DEFAULT_K = 8


def build_coordinate_graph(coords: np.ndarray, k: int = DEFAULT_K) -> EdgeSet:
    """Self-inclusive k-NN graph on point coordinates."""
    return knn(coords, coords, k, metric="coords", include_self=True)


def register(params: tn.ParameterStore, widths=DEFAULT_WIDTHS) -> list[tn.ParamGroup]:
    groups = []
    fan_in = 0
    for h, width in enumerate(widths, start=1):
        # previous-layer feature, target coordinates, offset
        groups.append(params.add(f"ssgnn.{h}", fan_in + 6, width))
        fan_in = width
    return groups


def ssgnn_forward(
    coords: np.ndarray,
    graph: EdgeSet,
    groups: list[tn.ParamGroup],
    message_uses_source_feature: bool = False,
) -> tn.Tensor:
    """Run the message-passing layers and return ``(..., N, d_s)`` features.

    Each edge message is an affine map of ``(s_i, p_i, p_j - p_i)``, where
    ``s_i`` is the target's previous-layer feature (absent at the first
    layer); nodes keep the elementwise max over their messages. With
    ``message_uses_source_feature`` the neighbour's feature ``s_j`` is used
    instead of ``s_i``.
    """
    src = graph.sources
    s = None
    for group in groups:
        W = group.W
        w_in = W.shape[0] - 6
        # target-only part of the message: own feature (if any) and coordinates
        node = tn.add(tn.linear_rows(coords, W, w_in, w_in + 3), group.b)
        table = None
        if s is not None:
            feat = tn.linear_rows(s, W, 0, w_in)
            if message_uses_source_feature:
                table = feat
            else:
                node = tn.add(node, feat)
        elif w_in:
            raise DimensionError(f"{group.name}: first layer expects no input feature")
        s = tn.edge_max(node, graph.delta_p, W, w_in + 3, table=table, index=src)
    return s
