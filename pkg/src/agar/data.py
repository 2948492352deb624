"""Synthetic point-cloud sequences and their on-disk format.

Two generators:

* ``rigid`` -- procedural planar glyphs (digit-like strokes) drifting at
  constant velocity and bouncing off the walls of a box;
* ``articulated`` -- a torso translating at constant velocity with two limbs
  swinging about hinges, i.e. a global motion plus two local ones.

On disk a sequence is a JSON manifest plus one text file per frame with one
``x y z`` line per point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FormatError

GLYPHS: dict[int, list[tuple]] = {
    # ("line", x0, y0, x1, y1) | ("arc", cx, cy, rx, ry, a0, a1) in a unit box
    0: [("arc", 0.5, 0.5, 0.32, 0.45, 0.0, 2 * np.pi)],
    1: [("line", 0.55, 0.05, 0.55, 0.95), ("line", 0.55, 0.95, 0.35, 0.75)],
    2: [("arc", 0.5, 0.7, 0.3, 0.25, np.pi, -0.3), ("line", 0.78, 0.62, 0.2, 0.05), ("line", 0.2, 0.05, 0.85, 0.05)],
    3: [("arc", 0.45, 0.73, 0.3, 0.22, 0.75 * np.pi, -0.5 * np.pi), ("arc", 0.45, 0.28, 0.33, 0.23, 0.5 * np.pi, -0.75 * np.pi)],
    4: [("line", 0.65, 0.05, 0.65, 0.95), ("line", 0.65, 0.95, 0.15, 0.35), ("line", 0.15, 0.35, 0.85, 0.35)],
    5: [("line", 0.8, 0.95, 0.25, 0.95), ("line", 0.25, 0.95, 0.22, 0.55), ("arc", 0.48, 0.32, 0.3, 0.27, 0.8 * np.pi, -0.85 * np.pi)],
    6: [("arc", 0.5, 0.3, 0.28, 0.25, 0.0, 2 * np.pi), ("arc", 0.7, 0.45, 0.48, 0.5, 0.6 * np.pi, np.pi)],
    7: [("line", 0.15, 0.95, 0.85, 0.95), ("line", 0.85, 0.95, 0.4, 0.05)],
    8: [("arc", 0.5, 0.73, 0.22, 0.21, 0.0, 2 * np.pi), ("arc", 0.5, 0.28, 0.28, 0.26, 0.0, 2 * np.pi)],
    9: [("arc", 0.5, 0.7, 0.27, 0.24, 0.0, 2 * np.pi), ("line", 0.77, 0.7, 0.6, 0.05)],
}


@dataclass
class Sequence:
    """``frames`` is ``(T, N, 3)``; everything else is bookkeeping."""

    frames: np.ndarray
    name: str = "sequence"
    generator: str = "file"
    seed: int = 0
    split: str = "train"
    bounds: list[list[float]] | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 3 or self.frames.shape[-1] != 3:
            raise FormatError(f"{self.name}: frames must be (T, N, 3), got {self.frames.shape}")
        if self.frames.shape[0] < 2:
            raise FormatError(f"{self.name}: a sequence needs T >= 2 frames, got {self.frames.shape[0]}")

    @property
    def T(self) -> int:
        return self.frames.shape[0]

    @property
    def N(self) -> int:
        return self.frames.shape[1]


# ----------------------------------------------------------------- glyphs


def _stroke_polyline(stroke: tuple, n: int = 256) -> np.ndarray:
    if stroke[0] == "line":
        _, x0, y0, x1, y1 = stroke
        t = np.linspace(0.0, 1.0, n)
        return np.stack([x0 + (x1 - x0) * t, y0 + (y1 - y0) * t], axis=1)
    _, cx, cy, rx, ry, a0, a1 = stroke
    a = np.linspace(a0, a1, n)
    return np.stack([cx + rx * np.cos(a), cy + ry * np.sin(a)], axis=1)


def glyph_points(glyph: int, n: int, size: float = 1.0, thickness: float = 0.0, rng=None) -> np.ndarray:
    """``n`` points spread evenly by arc length along a glyph's strokes.

    The glyph occupies ``[0, size]^2`` in the xy-plane (z = 0). A nonzero
    ``thickness`` adds a fixed random offset per point, drawn from ``rng``.
    """
    if glyph not in GLYPHS:
        raise ConfigError(f"unknown glyph {glyph}; choose 0-9")
    polys = [_stroke_polyline(s) for s in GLYPHS[glyph]]
    seg_len = [np.linalg.norm(np.diff(p, axis=0), axis=1) for p in polys]
    cum = np.cumsum([0.0] + [float(s.sum()) for s in seg_len])
    targets = (np.arange(n) + 0.5) * cum[-1] / n
    out = np.empty((n, 2))
    for i, s in enumerate(targets):
        k = min(int(np.searchsorted(cum, s, side="right")) - 1, len(polys) - 1)
        local = s - cum[k]
        arc = np.concatenate([[0.0], np.cumsum(seg_len[k])])
        out[i, 0] = np.interp(local, arc, polys[k][:, 0])
        out[i, 1] = np.interp(local, arc, polys[k][:, 1])
    if thickness > 0:
        out += (rng or np.random.default_rng(0)).uniform(-thickness, thickness, size=out.shape)
    out = np.clip(out, 0.0, 1.0) * size
    return np.concatenate([out, np.zeros((n, 1))], axis=1)


def _bounce(start: float, velocity: float, lo: float, hi: float, steps: np.ndarray) -> np.ndarray:
    """Position of a point moving at ``velocity`` and reflecting inside ``[lo, hi]``."""
    span = hi - lo
    if span <= 0:
        return np.full(steps.shape, lo)
    u = np.mod(start - lo + velocity * steps, 2 * span)
    return lo + np.where(u <= span, u, 2 * span - u)


def gen_rigid(
    glyph: int | list[int],
    N: int = 128,
    T: int = 20,
    seed: int = 0,
    bounds: tuple[tuple[float, float], tuple[float, float]] = ((-1.0, 1.0), (-1.0, 1.0)),
    size: float = 0.6,
    speed: tuple[float, float] = (0.05, 0.12),
    velocity: np.ndarray | None = None,
    thickness: float = 0.02,
    split: str = "train",
) -> Sequence:
    """Glyph(s) translating at constant velocity, reflecting at the box walls.

    Pass a list of glyph ids for several independently moving glyphs; ``N``
    points are split evenly between them. ``velocity`` (``(n_glyphs, 2)``)
    overrides the random per-glyph velocity.
    """
    glyphs = [glyph] if isinstance(glyph, (int, np.integer)) else list(glyph)
    (x0, x1), (y0, y1) = bounds
    if T < 2:
        raise ConfigError("T must be >= 2")
    if not (x1 - x0 > size and y1 - y0 > size):
        raise ConfigError(f"bounds {bounds} cannot hold a glyph of size {size}")
    if N % len(glyphs):
        raise ConfigError(f"N={N} is not divisible by {len(glyphs)} glyphs")
    rng = np.random.default_rng(seed)
    steps = np.arange(T, dtype=np.float64)
    frames = np.zeros((T, N, 3))
    per = N // len(glyphs)
    vels = []
    for g_i, g in enumerate(glyphs):
        shape = glyph_points(int(g), per, size, thickness * size, rng)
        lo_xy, hi_xy = shape[:, :2].min(axis=0), shape[:, :2].max(axis=0)
        # allowed range for the offset so the whole glyph stays inside the box
        lo = np.array([x0, y0]) - lo_xy
        hi = np.array([x1, y1]) - hi_xy
        start = rng.uniform(lo, hi)
        if velocity is None:
            ang = rng.uniform(0, 2 * np.pi)
            v = rng.uniform(*speed) * np.array([np.cos(ang), np.sin(ang)])
        else:
            v = np.asarray(velocity, dtype=np.float64).reshape(len(glyphs), 2)[g_i]
        vels.append(v)
        off = np.stack([_bounce(start[a], v[a], lo[a], hi[a], steps) for a in range(2)], axis=1)
        frames[:, g_i * per : (g_i + 1) * per, :2] = shape[None, :, :2] + off[:, None, :]
    return Sequence(
        frames,
        name=f"rigid_{seed}",
        generator="rigid",
        seed=seed,
        split=split,
        bounds=[[x0, x1], [y0, y1], [0.0, 0.0]],
        params={"glyphs": [int(g) for g in glyphs], "velocity": np.asarray(vels).tolist(), "size": size},
    )


# ----------------------------------------------------------------- articulated

TORSO_HALF = 0.4
TORSO_RADIUS = 0.08
LIMB_RADIUS = 0.04
HINGES = ((0.0, 0.3, 0.0), (0.0, -0.4, 0.0))


def articulated_parts(N: int) -> tuple[int, int, int]:
    """Point counts for (torso, limb 1, limb 2)."""
    n_limb = N // 4
    return N - 2 * n_limb, n_limb, n_limb


def gen_articulated(
    N: int = 128,
    T: int = 12,
    seed: int = 0,
    bounds: float = 2.0,
    velocity: np.ndarray | None = None,
    rates: tuple[float, float] | None = None,
    lengths: tuple[float, float] | None = None,
    split: str = "train",
) -> Sequence:
    """A 3-segment body: translating torso plus two limbs rotating about hinges.

    The torso moves by exactly ``velocity`` per frame; limb ``i`` turns
    about the z-axis through its hinge by ``rates[i]`` radians per frame.
    Random parameters are drawn from ``seed``; speeds are small enough that
    a limb tip always moves faster than the torso.
    """
    if T < 2:
        raise ConfigError("T must be >= 2")
    rng = np.random.default_rng(seed)
    n_torso, n_a, n_b = articulated_parts(N)
    if min(n_torso, n_a, n_b) < 1:
        raise ConfigError(f"N={N} too small for a 3-segment body")

    y = rng.uniform(-TORSO_HALF, TORSO_HALF, n_torso)
    phi = rng.uniform(0, 2 * np.pi, n_torso)
    torso = np.stack([TORSO_RADIUS * np.cos(phi), y, TORSO_RADIUS * np.sin(phi)], axis=1)

    if lengths is None:
        lengths = (rng.uniform(0.45, 0.6), rng.uniform(0.5, 0.65))
    if rates is None:
        rates = tuple(float(r) for r in rng.uniform(0.25, 0.45, 2) * rng.choice([-1.0, 1.0], 2))
    # arm starts pointing roughly +x, leg roughly -x
    start_angles = (rng.uniform(-0.5, 0.5), rng.uniform(np.pi - 0.5, np.pi + 0.5))
    limbs_local = []
    for n, length in ((n_a, lengths[0]), (n_b, lengths[1])):
        s = (np.arange(n) + 0.5) / n * length
        jitter = rng.uniform(-LIMB_RADIUS, LIMB_RADIUS, size=(n, 2))
        limbs_local.append((s, jitter))

    if velocity is None:
        ang = rng.uniform(0, 2 * np.pi)
        elev = rng.uniform(-0.3, 0.3)
        speed = rng.uniform(0.02, 0.045)
        velocity = speed * np.array([np.cos(ang) * np.cos(elev), np.sin(ang) * np.cos(elev), np.sin(elev)])
    velocity = np.asarray(velocity, dtype=np.float64)
    reach = max(TORSO_HALF + TORSO_RADIUS, *(abs(h[1]) + l + LIMB_RADIUS for h, l in zip(HINGES, lengths)))
    travel = velocity * (T - 1)
    slack = bounds - reach - np.abs(travel) / 2
    if np.any(slack < 0):
        raise ConfigError(f"bounds {bounds} too small for this trajectory")
    centre0 = -travel / 2 + rng.uniform(-1, 1, 3) * slack

    frames = np.empty((T, N, 3))
    for t in range(T):
        centre = centre0 + velocity * t
        parts = [torso + centre]
        for (s, jit), hinge, a0, w in zip(limbs_local, HINGES, start_angles, rates):
            a = a0 + w * t
            along = np.array([np.cos(a), np.sin(a), 0.0])
            across = np.array([-np.sin(a), np.cos(a), 0.0])
            pts = np.asarray(hinge) + s[:, None] * along + jit[:, :1] * across + jit[:, 1:] * np.array([0, 0, 1.0])
            parts.append(pts + centre)
        frames[t] = np.concatenate(parts)
    return Sequence(
        frames,
        name=f"articulated_{seed}",
        generator="articulated",
        seed=seed,
        split=split,
        bounds=[[-bounds, bounds]] * 3,
        params={
            "velocity": velocity.tolist(),
            "rates": [float(r) for r in rates],
            "lengths": [float(l) for l in lengths],
            "parts": list(articulated_parts(N)),
        },
    )


def make_dataset(generator: str, count: int, seed: int = 0, split: str = "train", **kw) -> list[Sequence]:
    """``count`` sequences with consecutive seeds starting at ``seed``."""
    out = []
    for s in range(seed, seed + count):
        if generator == "rigid":
            kw_r = dict(kw)
            glyph = kw_r.pop("glyph", None)
            if glyph is None:
                glyph = int(np.random.default_rng(s).integers(10))
            out.append(gen_rigid(glyph, seed=s, split=split, **kw_r))
        elif generator == "articulated":
            out.append(gen_articulated(seed=s, split=split, **kw))
        else:
            raise ConfigError(f"unknown generator {generator!r}")
    return out


# ----------------------------------------------------------------- file I/O

MANIFEST_KEYS = ("name", "T", "N", "generator", "seed", "frames")


def _fmt(v: float) -> str:
    return np.format_float_positional(v, unique=True, trim="-")


def write_frame(path, coords: np.ndarray) -> None:
    with open(path, "w") as fh:
        for x, y, z in coords:
            fh.write(f"{_fmt(x)} {_fmt(y)} {_fmt(z)}\n")


def read_frame(path, n_expected: int | None = None) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"{path}: frame file missing")
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 fields, got {len(fields)}")
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: not a number: {line.strip()!r}") from None
    if n_expected is not None and len(rows) != n_expected:
        raise FormatError(f"{path}:{len(rows)}: expected {n_expected} points, found {len(rows)}")
    return np.asarray(rows, dtype=np.float64).reshape(-1, 3)


def save_sequence(seq: Sequence, directory) -> Path:
    """Write frames and ``manifest.json`` under ``directory``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for t, frame in enumerate(seq.frames):
        name = f"frame_{t:04d}.txt"
        write_frame(directory / name, frame)
        names.append(name)
    manifest = {
        "name": seq.name,
        "T": seq.T,
        "N": seq.N,
        "generator": seq.generator,
        "seed": seq.seed,
        "split": seq.split,
        "bounds": seq.bounds,
        "params": seq.params,
        "frames": names,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_sequence(manifest_path) -> Sequence:
    manifest_path = Path(manifest_path)
    try:
        meta = json.loads(manifest_path.read_text())
    except FileNotFoundError:
        raise FormatError(f"{manifest_path}: manifest missing") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{manifest_path}: {exc}") from None
    missing = [k for k in MANIFEST_KEYS if k not in meta]
    if missing:
        raise FormatError(f"{manifest_path}: missing key(s) {missing}")
    T, N = meta["T"], meta["N"]
    if not isinstance(T, int) or T < 2:
        raise FormatError(f"{manifest_path}: T must be an integer >= 2, got {T!r}")
    if len(meta["frames"]) != T:
        raise FormatError(f"{manifest_path}: lists {len(meta['frames'])} frames but T={T}")
    frames = np.stack([read_frame(manifest_path.parent / f, N) for f in meta["frames"]])
    return Sequence(
        frames,
        name=meta["name"],
        generator=meta["generator"],
        seed=meta["seed"],
        split=meta.get("split", "train"),
        bounds=meta.get("bounds"),
        params=meta.get("params", {}),
    )


def save_dataset(seqs: list[Sequence], directory) -> list[Path]:
    directory = Path(directory)
    paths = [save_sequence(s, directory / s.name) for s in seqs]
    index = {"manifests": [str(p.relative_to(directory)) for p in paths]}
    (directory / "index.json").write_text(json.dumps(index, indent=2) + "\n")
    return paths


def load_dataset(path) -> list[Sequence]:
    """Load from a manifest, a dataset directory with ``index.json``, or any directory of manifests."""
    path = Path(path)
    if path.is_file():
        return [load_sequence(path)]
    index = path / "index.json"
    if index.is_file():
        rel = json.loads(index.read_text())["manifests"]
        return [load_sequence(path / r) for r in rel]
    found = sorted(path.glob("*/manifest.json"))
    if not found:
        raise FormatError(f"{path}: no manifests found")
    return [load_sequence(p) for p in found]
