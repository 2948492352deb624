"""Graph-RNN cells and the dynamic-extraction hierarchy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as tn
from .config import RunConfig
from .errors import ConfigError, DimensionError
from .geometry import PAST, PRESENT, EdgeSet, farthest_point_sample, gather_rows, knn_indices


@dataclass
class LevelState:
    """Recurrent memory of one level: the previous frame's points and features."""

    prev_coords: np.ndarray | None = None
    prev_spatial: tn.Tensor | None = None
    prev_dynamic: tn.Tensor | None = None
    valid: bool = False

    @classmethod
    def empty(cls) -> "LevelState":
        return cls()


@dataclass
class LevelOutput:
    coords: np.ndarray
    spatial: tn.Tensor | None
    dynamic: tn.Tensor
    sample_index: np.ndarray | None


def register(params: tn.ParameterStore, config: RunConfig) -> list[tn.ParamGroup]:
    d, ds = config.dynamic_width, config.spatial_width
    # target dynamic, source dynamic, dp, ds, dt
    return [params.add(f"cell.{l}", 2 * d + 3 + ds + 1, d) for l in range(1, config.levels + 1)]


def _virtual_past(coords: np.ndarray, spatial: tn.Tensor | None, width: int) -> LevelState:
    zeros = tn.Tensor(np.zeros(coords.shape[:-1] + (width,)))
    return LevelState(coords, spatial, zeros, valid=True)


def build_st_graph(
    coords: np.ndarray,
    spatial: tn.Tensor | None,
    state: LevelState,
    k: int,
    spatial_width: int | None = None,
    temporal_only: bool = False,
    feature_offsets: bool = True,
) -> EdgeSet:
    """Present + past k-NN edges chosen by spatial-feature distance.

    With ``spatial=None`` (the no-spatial-features ablation) both searches
    run on coordinates and the feature offsets are zero. ``temporal_only``
    drops the present edges and takes ``2k`` past neighbours instead.
    ``state`` must already hold a (possibly virtual) past frame.
    ``feature_offsets=False`` leaves ``delta_s`` unset; the cell derives
    the same quantity blockwise.
    """
    if not state.valid:
        raise DimensionError("build_st_graph needs a valid past state")
    use_feats = spatial is not None
    here = spatial.data if use_feats else coords
    there = state.prev_spatial.data if use_feats else state.prev_coords
    blocks, tags = [], []
    if not temporal_only:
        present = knn_indices(here, here, k, include_self=True)
        blocks.append(present)
        tags += [PRESENT] * present.shape[-1]
    past = knn_indices(here, there, 2 * k if temporal_only else k)
    blocks.append(past)
    tags += [PAST] * past.shape[-1]
    src = np.concatenate(blocks, axis=-1)
    n_present = len(tags) - past.shape[-1]

    p_i = coords[..., :, None, :]
    dp_parts = []
    if n_present:
        dp_parts.append(gather_rows(coords, src[..., :n_present]) - p_i)
    dp_parts.append(gather_rows(state.prev_coords, past) - p_i)
    edges = EdgeSet(src, np.array(tags), np.concatenate(dp_parts, axis=-2))

    if not feature_offsets:
        return edges
    if use_feats:
        s_parts = []
        if n_present:
            s_parts.append(tn.gather(spatial, src[..., :n_present]))
        s_parts.append(tn.gather(state.prev_spatial, past))
        s_i = tn.reshape(spatial, spatial.shape[:-1] + (1, spatial.shape[-1]))
        edges.delta_s = tn.sub(tn.concat(s_parts, axis=-2), s_i)
    else:
        edges.delta_s = tn.Tensor(np.zeros(src.shape + (spatial_width or 0,)))
    return edges


def cell_forward(
    coords: np.ndarray,
    graph: EdgeSet,
    input_dynamic,
    state: LevelState,
    spatial: tn.Tensor | None,
    group: tn.ParamGroup,
) -> tuple[tn.Tensor, LevelState]:
    """One graph-RNN update.

    Messages are affine maps of ``(d_i, d_j, dp, ds, dt)`` where ``d_j`` is
    read from ``input_dynamic`` for present edges and from the state's
    previous output for past edges; each node keeps the elementwise max.

    The weight is applied blockwise: terms that depend on one endpoint only
    are computed per node and then gathered, which is algebraically the
    same map as concatenating the edge inputs first.
    """
    x = tn.as_tensor(input_dynamic)
    W = group.W
    d = x.shape[-1]
    ds = W.shape[0] - 2 * d - 4
    src = graph.sources
    kp = graph.k_present
    if graph.delta_p.shape[-1] != 3 or ds < 0:
        raise DimensionError(f"{group.name}: weight rows {W.shape[0]} do not fit dynamic width {d}")
    if tn.as_tensor(state.prev_dynamic).shape[-1] != d:
        raise DimensionError(f"{group.name}: state width differs from input width {d}")

    src_here = tn.linear_rows(x, W, d, 2 * d)
    src_past = tn.linear_rows(state.prev_dynamic, W, d, 2 * d)
    target = tn.add(tn.linear_rows(x, W, 0, d), group.b)
    if spatial is not None:
        lo, hi = 2 * d + 3, 2 * d + 3 + ds
        s_here = tn.linear_rows(spatial, W, lo, hi)
        src_here = tn.add(src_here, s_here)
        src_past = tn.add(src_past, tn.linear_rows(state.prev_spatial, W, lo, hi))
        target = tn.sub(target, s_here)
    # one lookup table: present-frame rows first, then past-frame rows
    n_here = x.shape[-2]
    table = tn.concat([src_here, src_past], axis=-2)
    index = np.concatenate([src[..., :kp], src[..., kp:] + n_here], axis=-1)
    out = tn.edge_max(
        target, graph.delta_p, W, 2 * d, table=table, index=index,
        tag=graph.delta_t, tag_row=W.shape[0] - 1,
    )
    return out, LevelState(coords, spatial, out, valid=True)


def de_phase(
    coords: np.ndarray,
    spatial: tn.Tensor | None,
    states: list[LevelState],
    config: RunConfig,
    groups: list[tn.ParamGroup],
    sample_indices: list[np.ndarray | None] | None = None,
) -> tuple[list[LevelOutput], list[LevelState]]:
    """Run the stacked cells on one (batched) frame.

    Level 1 sees the full cloud with zero input dynamics unless
    ``config.sample_first_level``; every later level first keeps a
    farthest-point subset of the previous level's points, carrying their
    spatial and dynamic features along. ``sample_indices`` pins the subsets
    (entries of ``None`` fall back to FPS).
    """
    if len(states) != config.levels:
        raise ConfigError(f"expected {config.levels} level states, got {len(states)}")
    sizes = config.level_sizes(coords.shape[-2])
    width = config.dynamic_width
    cur_c = coords
    cur_s = spatial
    cur_d = tn.Tensor(np.zeros(coords.shape[:-1] + (width,)))
    outputs, new_states = [], []
    for l in range(config.levels):
        idx = None
        if l > 0 or config.sample_first_level:
            idx = sample_indices[l] if sample_indices is not None and sample_indices[l] is not None else None
            if idx is None:
                idx = farthest_point_sample(cur_c, sizes[l])
            cur_c = gather_rows(cur_c, idx)
            cur_s = tn.gather(cur_s, idx) if cur_s is not None else None
            cur_d = tn.gather(cur_d, idx)
        state = states[l] if states[l].valid else _virtual_past(cur_c, cur_s, width)
        graph = build_st_graph(
            cur_c, cur_s, state, config.k[l],
            spatial_width=config.spatial_width,
            temporal_only=config.temporal_only_graph,
            feature_offsets=False,
        )
        out, new_state = cell_forward(cur_c, graph, cur_d, state, cur_s, groups[l])
        outputs.append(LevelOutput(cur_c, cur_s, out, idx))
        new_states.append(new_state)
        cur_d = out
    return outputs, new_states
