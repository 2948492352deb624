"""Feature propagation (classic and attention-gated), motion head, motion attribution."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import tensor as tn
from .config import RunConfig
from .errors import DimensionError
from .geometry import interpolate


@dataclass
class AttentionReport:
    """Per-point explanation of one predicted frame (single cloud, no batch axis).

    ``alpha`` is ``(N, L)`` (absent for classic fusion), ``level_motions``
    ``(L, N, 3)`` and ``baseline`` the motion produced when every level's
    features are zero.
    """

    coords: np.ndarray
    motion: np.ndarray
    alpha: np.ndarray | None = None
    level_motions: np.ndarray | None = None
    baseline: np.ndarray | None = None

    @property
    def levels(self) -> int:
        if self.level_motions is not None:
            return self.level_motions.shape[0]
        return 0 if self.alpha is None else self.alpha.shape[1]

    def reconstruction(self) -> np.ndarray:
        return self.level_motions.sum(axis=0) + self.baseline

    def residual(self) -> float:
        """``||sum_l M^l + baseline - M|| / ||M||`` (exactly 0 for linear heads)."""
        norm = np.linalg.norm(self.motion)
        return float(np.linalg.norm(self.reconstruction() - self.motion) / max(norm, 1e-300))

    def header(self) -> list[str]:
        cols = ["index", "x", "y", "z"]
        if self.alpha is not None:
            cols += [f"alpha_{l}" for l in range(1, self.alpha.shape[1] + 1)]
        if self.level_motions is not None:
            for l in range(1, self.level_motions.shape[0] + 1):
                cols += [f"m{l}_x", f"m{l}_y", f"m{l}_z"]
        return cols + ["m_x", "m_y", "m_z"]

    def rows(self) -> list[list[float]]:
        out = []
        for i in range(self.coords.shape[0]):
            row = [i, *self.coords[i]]
            if self.alpha is not None:
                row += list(self.alpha[i])
            if self.level_motions is not None:
                for m in self.level_motions:
                    row += list(m[i])
            out.append(row + list(self.motion[i]))
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header())
            for row in self.rows():
                w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def register(params: tn.ParameterStore, config: RunConfig) -> dict[str, list[tn.ParamGroup]]:
    d, L = config.dynamic_width, config.levels
    groups: dict[str, list[tn.ParamGroup]] = {}
    if config.fusion == "classic":
        if L == 1:
            groups["fp"] = [params.add("fp.1", d, d)]
        else:
            groups["fp"] = [params.add(f"fp.{l}", 2 * d, d) for l in range(1, L)]
    else:
        groups["refine"] = [params.add(f"refine.{l}", d, d) for l in range(1, L + 1)]
        groups["attn"] = [params.add(f"attn.{l}", L * d, 1) for l in range(1, L + 1)]
        groups["fc"] = [params.add("fc", L * d, d)]
    groups["head"] = [params.add("head", d, 3)]
    return groups


def _lift(coords, interp, target: int, source: int, feats) -> tn.Tensor:
    w = None if interp is None else interp.get((target, source))
    return interpolate(coords[target], coords[source], feats, weights=w)


def interpolation_pairs(config: RunConfig) -> list[tuple[int, int]]:
    """``(target level, source level)`` pairs the fusion step interpolates along (0-based)."""
    L = config.levels
    if config.fusion == "classic":
        return [(l, l + 1) for l in range(L - 1)]
    return [(0, l) for l in range(1, L)]


def classic_fp(
    coords: list[np.ndarray], feats: list, groups: list[tn.ParamGroup], act: str = "relu", interp=None
) -> tn.Tensor:
    """Upsample coarse features level by level, each time fusing with the skip link."""
    L = len(feats)
    if L == 1:
        return tn.activation(act, tn.affine(feats[0], groups[0]))
    cur = tn.as_tensor(feats[-1])
    for l in range(L - 2, -1, -1):
        up = _lift(coords, interp, l, l + 1, cur)
        cur = tn.activation(act, tn.affine(tn.concat([feats[l], up], axis=-1), groups[l]))
    return cur


def adaptive_combine(
    coords: list[np.ndarray],
    feats: list,
    groups: dict[str, list[tn.ParamGroup]],
    act: str = "relu",
    attention_act: str = "sigmoid",
    forced_alpha: np.ndarray | None = None,
    interp=None,
) -> tuple[tn.Tensor, tn.Tensor]:
    """Attention-gated fusion. Returns ``(final features, alpha)``.

    Every level is brought to level-1 resolution, refined, and scaled by a
    per-point scalar gate computed from all refined levels together.
    ``forced_alpha`` (``(..., N, L)``) bypasses the gate computation.
    ``interp`` maps ``(target, source)`` level pairs to precomputed weights.
    """
    L = len(feats)
    up = [tn.as_tensor(feats[0])] + [_lift(coords, interp, 0, l, feats[l]) for l in range(1, L)]
    psi = [tn.activation(act, tn.affine(u, g)) for u, g in zip(up, groups["refine"])]
    if forced_alpha is None:
        joint = tn.concat(psi, axis=-1)
        alphas = [tn.activation(attention_act, tn.affine(joint, g)) for g in groups["attn"]]
        alpha = tn.concat(alphas, axis=-1)
    else:
        want = psi[0].shape[:-1] + (L,)
        try:
            alpha = tn.Tensor(np.broadcast_to(np.asarray(forced_alpha, dtype=np.float64), want))
        except ValueError:
            raise DimensionError(f"forced_alpha shape {np.shape(forced_alpha)} != {want}") from None
        alphas = [tn.getitem(alpha, (..., slice(l, l + 1))) for l in range(L)]
    gated = [tn.mul(p, a) for p, a in zip(psi, alphas)]
    final = tn.activation(act, tn.affine(tn.concat(gated, axis=-1), groups["fc"][0]))
    return final, alpha


def predict_next(coords: np.ndarray, final, head: tn.ParamGroup) -> tuple[tn.Tensor, tn.Tensor]:
    """Motion vectors from the final features, added to the input points."""
    motion = tn.affine(final, head)
    return tn.add(coords, motion), motion


def fuse(
    coords: list[np.ndarray],
    feats: list,
    groups: dict[str, list[tn.ParamGroup]],
    config: RunConfig,
    forced_alpha: np.ndarray | None = None,
    interp=None,
) -> tuple[tn.Tensor, tn.Tensor | None]:
    if config.fusion == "classic":
        return classic_fp(coords, feats, groups["fp"], config.hidden_activation, interp), None
    return adaptive_combine(
        coords, feats, groups, config.hidden_activation, config.attention_activation, forced_alpha, interp
    )


def disentangle_motions(
    frame_coords: np.ndarray,
    coords: list[np.ndarray],
    feats: list,
    groups: dict[str, list[tn.ParamGroup]],
    config: RunConfig,
) -> AttentionReport:
    """Attribute the predicted motion to individual levels.

    ``M^l`` is the motion obtained when only level ``l`` keeps its features,
    minus the motion obtained when every level is zeroed. In adaptive mode
    the gates stay frozen at their full-input values. For identity
    activations ``sum_l M^l + baseline`` reproduces ``M`` exactly.
    Inputs are unbatched (one cloud).
    """
    feats = [np.asarray(f.data if isinstance(f, tn.Tensor) else f) for f in feats]

    def motion(fs, alpha=None):
        final, a = fuse(coords, fs, groups, config, forced_alpha=alpha)
        if final.shape[-2] != frame_coords.shape[-2]:
            final = interpolate(frame_coords, coords[0], final)
        return tn.affine(final, groups["head"][0]).data, a

    with tn.no_grad():
        full, alpha = motion(feats)
        frozen = None if alpha is None else alpha.data
        zeros = [np.zeros_like(f) for f in feats]
        baseline, _ = motion(zeros, frozen)
        per_level = []
        for l in range(len(feats)):
            only = [f if i == l else z for i, (f, z) in enumerate(zip(feats, zeros))]
            m, _ = motion(only, frozen)
            per_level.append(m - baseline)
        shown = frozen
        if shown is not None and shown.shape[-2] != frame_coords.shape[-2]:
            shown = interpolate(frame_coords, coords[0], shown).data
    return AttentionReport(
        coords=np.asarray(frame_coords),
        motion=full,
        alpha=shown,
        level_motions=np.stack(per_level),
        baseline=baseline,
    )
