"""The full predictor: spatial GNN, graph-RNN hierarchy, fusion and motion head."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import combine, graphrnn, ssgnn
from . import tensor as tn
from .combine import AttentionReport
from .config import RunConfig
from .geometry import EdgeSet, farthest_point_sample, gather_rows, interpolate, interpolation_weights
from .graphrnn import LevelOutput, LevelState


@dataclass
class FrameGeometry:
    """Everything about one input frame that depends on coordinates alone.

    With teacher forcing the input frames are known in advance, so this can
    be computed once per frame and reused every iteration. Arrays carry the
    same leading batch axis as the coordinates they were built from.
    """

    ssgnn_graph: EdgeSet | None
    sample_indices: list[np.ndarray | None]
    interp: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]]
    frame_interp: tuple[np.ndarray, np.ndarray] | None

    @staticmethod
    def stack(items: list["FrameGeometry"]) -> "FrameGeometry":
        """Batch unbatched geometries along a new leading axis."""
        first = items[0]
        graph = None
        if first.ssgnn_graph is not None:
            graph = EdgeSet(
                np.stack([g.ssgnn_graph.sources for g in items]),
                first.ssgnn_graph.tags,
                np.stack([g.ssgnn_graph.delta_p for g in items]),
            )
        samples = [
            None if idx is None else np.stack([g.sample_indices[l] for g in items])
            for l, idx in enumerate(first.sample_indices)
        ]

        def pair(get):
            a = [get(g) for g in items]
            return np.stack([x[0] for x in a]), np.stack([x[1] for x in a])

        interp = {key: pair(lambda g, key=key: g.interp[key]) for key in first.interp}
        frame = None if first.frame_interp is None else pair(lambda g: g.frame_interp)
        return FrameGeometry(graph, samples, interp, frame)


@dataclass
class StepOutput:
    prediction: tn.Tensor
    motion: tn.Tensor
    final: tn.Tensor
    alpha: tn.Tensor | None
    spatial: tn.Tensor | None
    levels: list[LevelOutput]
    states: list[LevelState]


class AgarModel:
    """Frame-by-frame predictor ``P_t -> P_{t+1}`` with recurrent level states.

    Parameter groups are registered in a fixed order (SS-GNN layers, cells,
    fusion, head) so a seed fully determines the initial weights.
    """

    def __init__(self, config: RunConfig, params: tn.ParameterStore | None = None):
        self.config = config
        self.params = params if params is not None else tn.ParameterStore(config.seed)
        if len(self.params) == 0:
            self._register(self.params)
        self.ssgnn_groups = [self.params[f"ssgnn.{h}"] for h in range(1, len(config.ssgnn_widths) + 1)]
        self.cell_groups = [self.params[f"cell.{l}"] for l in range(1, config.levels + 1)]
        self.fusion_groups = self._fusion_groups()

    def _register(self, params: tn.ParameterStore) -> None:
        ssgnn.register(params, self.config.ssgnn_widths)
        graphrnn.register(params, self.config)
        combine.register(params, self.config)

    def _fusion_groups(self) -> dict[str, list[tn.ParamGroup]]:
        L, p = self.config.levels, self.params
        if self.config.fusion == "classic":
            n_fp = 1 if L == 1 else L - 1
            out = {"fp": [p[f"fp.{l}"] for l in range(1, n_fp + 1)]}
        else:
            out = {
                "refine": [p[f"refine.{l}"] for l in range(1, L + 1)],
                "attn": [p[f"attn.{l}"] for l in range(1, L + 1)],
                "fc": [p["fc"]],
            }
        out["head"] = [p["head"]]
        return out

    @property
    def head(self) -> tn.ParamGroup:
        return self.params["head"]

    def initial_states(self) -> list[LevelState]:
        return [LevelState.empty() for _ in range(self.config.levels)]

    def spatial_features(self, coords: np.ndarray) -> tn.Tensor | None:
        if self.config.no_spatial_features:
            return None
        graph = ssgnn.build_coordinate_graph(coords, self.config.ssgnn_k)
        return ssgnn.ssgnn_forward(
            coords, graph, self.ssgnn_groups, self.config.message_uses_source_feature
        )

    def geometry(self, coords: np.ndarray) -> FrameGeometry:
        """Precompute the coordinate-only structure of a frame (see :class:`FrameGeometry`)."""
        cfg = self.config
        coords = np.asarray(coords, dtype=np.float64)
        graph = None if cfg.no_spatial_features else ssgnn.build_coordinate_graph(coords, cfg.ssgnn_k)
        sizes = cfg.level_sizes(coords.shape[-2])
        samples: list[np.ndarray | None] = []
        level_coords = []
        cur = coords
        for l in range(cfg.levels):
            if l > 0 or cfg.sample_first_level:
                idx = farthest_point_sample(cur, sizes[l])
                cur = gather_rows(cur, idx)
                samples.append(idx)
            else:
                samples.append(None)
            level_coords.append(cur)
        interp = {
            (t, s): interpolation_weights(level_coords[t], level_coords[s])
            for t, s in combine.interpolation_pairs(cfg)
        }
        frame = interpolation_weights(coords, level_coords[0]) if cfg.sample_first_level else None
        return FrameGeometry(graph, samples, interp, frame)

    def step(
        self,
        coords: np.ndarray,
        states: list[LevelState],
        forced_alpha: np.ndarray | None = None,
        sample_indices: list[np.ndarray | None] | None = None,
        geometry: FrameGeometry | None = None,
    ) -> StepOutput:
        """Predict the next frame from ``coords`` (``(N, 3)`` or ``(B, N, 3)``).

        ``geometry`` (from :meth:`geometry` on the same coordinates) skips
        recomputing graphs, samples and interpolation weights; results are
        identical either way.
        """
        coords = np.asarray(coords, dtype=np.float64)
        interp = frame_interp = None
        if geometry is not None:
            sample_indices = geometry.sample_indices
            interp, frame_interp = geometry.interp, geometry.frame_interp
        if self.config.no_spatial_features:
            spatial = None
        else:
            graph = geometry.ssgnn_graph if geometry is not None else None
            if graph is None:
                graph = ssgnn.build_coordinate_graph(coords, self.config.ssgnn_k)
            spatial = ssgnn.ssgnn_forward(
                coords, graph, self.ssgnn_groups, self.config.message_uses_source_feature
            )
        levels, new_states = graphrnn.de_phase(
            coords, spatial, states, self.config, self.cell_groups, sample_indices
        )
        final, alpha = combine.fuse(
            [lv.coords for lv in levels], [lv.dynamic for lv in levels],
            self.fusion_groups, self.config, forced_alpha, interp,
        )
        if final.shape[-2] != coords.shape[-2]:
            final = interpolate(coords, levels[0].coords, final, weights=frame_interp)
        pred, motion = combine.predict_next(coords, final, self.head)
        return StepOutput(pred, motion, final, alpha, spatial, levels, new_states)

    def explain(self, coords: np.ndarray, out: StepOutput) -> AttentionReport:
        """Per-level motion attribution for an unbatched step."""
        return combine.disentangle_motions(
            coords,
            [lv.coords for lv in out.levels],
            [lv.dynamic for lv in out.levels],
            self.fusion_groups,
            self.config,
        )
