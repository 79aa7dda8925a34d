"""Gaussian scene prior: synthesis, binary persistence, novel-object injection.

The scene file format ("GSC1") stores everything as little-endian 32-bit
floats, so `Scene` keeps its arrays in float32 and save/load round trips
bit-exactly.
"""

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, quat_to_mat

MAGIC = b"GSC1"

_GAUSSIAN_FLOATS = 14  # mean 3, scale 3, quat 4 (wxyz), color 3, opacity 1


class SceneError(ValueError):
    pass


class EmptyScene(SceneError):
    pass


class InvalidBounds(SceneError):
    pass


class MalformedScene(SceneError):
    """Bad magic or header."""


class TruncatedScene(SceneError):
    """Stream ended mid-record."""


class InvariantViolation(SceneError):
    """Loaded or constructed data violates a Gaussian/Scene invariant."""


@dataclass(frozen=True)
class Gaussian3D:
    mean: np.ndarray        # 3-vector, scene units
    scale: np.ndarray       # per-axis stddev, > 0
    rotation: np.ndarray    # unit quaternion (w, x, y, z)
    color: np.ndarray       # RGB in [0, 1]
    opacity: float          # (0, 1]

    def __post_init__(self):
        for name in ("mean", "scale", "rotation", "color"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=np.float32))
        validate_gaussian(self.mean, self.scale, self.rotation,
                          self.color, self.opacity)


def validate_gaussian(mean, scale, rotation, color, opacity):
    if abs(float(np.linalg.norm(np.asarray(rotation, dtype=np.float64))) - 1.0) > 1e-6:
        raise InvariantViolation("quaternion norm not within 1e-6 of 1")
    if np.any(np.asarray(scale) <= 0):
        raise InvariantViolation("scale components must be strictly positive")
    c = np.asarray(color)
    if c.min() < 0 or c.max() > 1:
        raise InvariantViolation("color outside [0, 1]")
    if not (0 < opacity <= 1):
        raise InvariantViolation("opacity outside (0, 1]")


@dataclass(frozen=True)
class Scene:
    """Ordered collection of 3D Gaussians with background and bounds.

    Canonical storage is struct-of-arrays in float32; `gaussians` offers the
    per-element view.  Immutable after construction.
    """

    means: np.ndarray       # (N, 3)
    scales: np.ndarray      # (N, 3)
    rotations: np.ndarray   # (N, 4) wxyz
    colors: np.ndarray      # (N, 3)
    opacities: np.ndarray   # (N,)
    background: np.ndarray  # (3,)
    bounds_min: np.ndarray  # (3,)
    bounds_max: np.ndarray  # (3,)

    def __post_init__(self):
        for name in ("means", "scales", "rotations", "colors", "opacities",
                     "background", "bounds_min", "bounds_max"):
            arr = np.asarray(getattr(self, name), dtype=np.float32)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self.validate()

    def validate(self):
        if not np.all(self.bounds_min < self.bounds_max):
            raise InvalidBounds("bounds.min must be < bounds.max componentwise")
        bg = np.asarray(self.background)
        if bg.min() < 0 or bg.max() > 1:
            raise InvariantViolation("background outside [0, 1]")
        for i in range(len(self.means)):
            validate_gaussian(self.means[i], self.scales[i], self.rotations[i],
                              self.colors[i], float(self.opacities[i]))
        inside = (self.means >= self.bounds_min) & (self.means <= self.bounds_max)
        if not np.all(inside):
            raise InvariantViolation("gaussian mean outside scene bounds")

    def __len__(self):
        return len(self.means)

    @property
    def bounds(self):
        return self.bounds_min.astype(np.float64), self.bounds_max.astype(np.float64)

    @property
    def diameter(self):
        return float(np.linalg.norm(self.bounds_max.astype(np.float64)
                                    - self.bounds_min.astype(np.float64)))

    @property
    def gaussians(self):
        return [Gaussian3D(self.means[i], self.scales[i], self.rotations[i],
                           self.colors[i], float(self.opacities[i]))
                for i in range(len(self))]

    @staticmethod
    def from_gaussians(gaussians, background, bounds):
        lo, hi = bounds
        n = len(gaussians)
        means = np.array([g.mean for g in gaussians], dtype=np.float32).reshape(n, 3)
        scales = np.array([g.scale for g in gaussians], dtype=np.float32).reshape(n, 3)
        rots = np.array([g.rotation for g in gaussians], dtype=np.float32).reshape(n, 4)
        colors = np.array([g.color for g in gaussians], dtype=np.float32).reshape(n, 3)
        ops = np.array([g.opacity for g in gaussians], dtype=np.float32).reshape(n)
        return Scene(means, scales, rots, colors, ops,
                     np.asarray(background, dtype=np.float32), lo, hi)


# --------------------------------------------------------------------------
# synthesis


def _normalize_rows(a):
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


def _scatter(rng, count, lo, hi):
    ext = hi - lo
    means = rng.uniform(lo + 0.05 * ext, hi - 0.05 * ext, size=(count, 3))
    smin = float(ext.min())
    scales = rng.uniform(0.01 * smin, 0.04 * smin, size=(count, 3))
    rots = _normalize_rows(rng.normal(size=(count, 4)))
    colors = rng.uniform(0.1, 1.0, size=(count, 3))
    ops = rng.uniform(0.3, 1.0, size=count)
    return means, scales, rots, colors, ops


def _lattice(rng, count, lo, hi):
    side = int(np.ceil(count ** (1.0 / 3.0)))
    axes = [np.linspace(lo[d] + 0.1 * (hi[d] - lo[d]),
                        hi[d] - 0.1 * (hi[d] - lo[d]), side) for d in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    means = grid[:count]
    smin = float((hi - lo).min())
    scales = np.full((count, 3), 0.02 * smin) * rng.uniform(0.8, 1.2, size=(count, 1))
    rots = np.tile([1.0, 0.0, 0.0, 0.0], (count, 1))
    colors = rng.uniform(0.1, 1.0, size=(count, 3))
    ops = rng.uniform(0.5, 1.0, size=count)
    return means, scales, rots, colors, ops


def _barrel_structure(rng, count, lo, hi):
    """Vertical pile columns joined by horizontal tubes, desk-scale."""
    ext = hi - lo
    n_piles = 6
    px = np.linspace(lo[0] + 0.2 * ext[0], hi[0] - 0.2 * ext[0], 3)
    pz = np.linspace(lo[2] + 0.3 * ext[2], hi[2] - 0.3 * ext[2], 2)
    pile_xy = [(x, z) for z in pz for x in px]
    n_pile_g = int(round(count * 0.7))
    n_tube_g = count - n_pile_g
    smin = float(ext.min())
    r = 0.03 * smin

    means, scales, colors = [], [], []
    for i in range(n_pile_g):
        x, z = pile_xy[i % n_piles]
        frac = (i // n_piles) / max(1, (n_pile_g - 1) // n_piles + 1)
        y = lo[1] + (0.15 + 0.7 * frac) * ext[1]
        means.append([x, y, z])
        scales.append([r, 2.0 * r, r])
        colors.append([0.85, 0.75, 0.15])  # yellow barrels
    # tubes join consecutive piles near the top
    y_tube = lo[1] + 0.82 * ext[1]
    for i in range(max(n_tube_g, 0)):
        a = pile_xy[i % (n_piles - 1)]
        b = pile_xy[i % (n_piles - 1) + 1]
        frac = ((i // (n_piles - 1)) % 8) / 8.0 + 0.0625
        x = a[0] + frac * (b[0] - a[0])
        z = a[1] + frac * (b[1] - a[1])
        means.append([x, y_tube, z])
        scales.append([2.0 * r, 0.6 * r, 0.6 * r])
        colors.append([0.55, 0.55, 0.6])  # metallic pipes
    means = np.asarray(means, dtype=np.float64)[:count]
    scales = np.asarray(scales, dtype=np.float64)[:count]
    colors = np.clip(np.asarray(colors)[:count]
                     + rng.normal(0, 0.05, size=(count, 3)), 0.05, 1.0)
    rots = np.tile([1.0, 0.0, 0.0, 0.0], (count, 1))
    ops = rng.uniform(0.7, 1.0, size=count)
    return means, scales, rots, colors, ops


_STYLES = {
    "scatter": _scatter,
    "lattice": _lattice,
    "barrel-structure": _barrel_structure,
}


def generate_synthetic_scene(seed, count, bounds, style="scatter",
                             background=(0.05, 0.1, 0.15)) -> Scene:
    """Deterministic synthetic scene; pure function of its arguments."""
    if count < 1:
        raise EmptyScene("count must be >= 1")
    lo = np.asarray(bounds[0], dtype=np.float64)
    hi = np.asarray(bounds[1], dtype=np.float64)
    if not np.all(lo < hi):
        raise InvalidBounds("degenerate bounds")
    if style not in _STYLES:
        raise ValueError(f"unknown style {style!r}")
    rng = np.random.default_rng(seed)
    means, scales, rots, colors, ops = _STYLES[style](rng, count, lo, hi)
    means = np.clip(means, lo + 1e-6, hi - 1e-6)
    return Scene(means, scales, rots, colors, ops,
                 np.asarray(background), lo, hi)


# --------------------------------------------------------------------------
# persistence


def scene_to_bytes(scene: Scene) -> bytes:
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", len(scene)))
    rec = np.concatenate([scene.means, scene.scales, scene.rotations,
                          scene.colors, scene.opacities[:, None]], axis=1)
    out.write(rec.astype("<f4").tobytes())
    out.write(scene.background.astype("<f4").tobytes())
    out.write(scene.bounds_min.astype("<f4").tobytes())
    out.write(scene.bounds_max.astype("<f4").tobytes())
    return out.getvalue()


def scene_from_bytes(raw: bytes) -> Scene:
    if len(raw) < 8:
        raise TruncatedScene("stream shorter than header")
    if raw[:4] != MAGIC:
        raise MalformedScene(f"bad magic {raw[:4]!r}")
    (count,) = struct.unpack_from("<I", raw, 4)
    body = 4 * (_GAUSSIAN_FLOATS * count + 9)
    if len(raw) < 8 + body:
        raise TruncatedScene(f"need {8 + body} bytes, have {len(raw)}")
    rec = np.frombuffer(raw, dtype="<f4", count=_GAUSSIAN_FLOATS * count,
                        offset=8).reshape(count, _GAUSSIAN_FLOATS)
    tail = np.frombuffer(raw, dtype="<f4", count=9,
                         offset=8 + 4 * _GAUSSIAN_FLOATS * count)
    return Scene(rec[:, 0:3], rec[:, 3:6], rec[:, 6:10], rec[:, 10:13],
                 rec[:, 13], tail[0:3], tail[3:6], tail[6:9])


def save_scene(scene: Scene, destination) -> bytes:
    raw = scene_to_bytes(scene)
    if hasattr(destination, "write"):
        destination.write(raw)
    else:
        with open(destination, "wb") as f:
            f.write(raw)
    return raw


def load_scene(source) -> Scene:
    if isinstance(source, (bytes, bytearray)):
        return scene_from_bytes(bytes(source))
    if hasattr(source, "read"):
        return scene_from_bytes(source.read())
    with open(source, "rb") as f:
        return scene_from_bytes(f.read())


# --------------------------------------------------------------------------
# novel objects


def add_novel_object(scene: Scene, fragment: Scene, placement: Pose) -> Scene:
    """Non-destructively merge a transformed scene fragment into a scene.

    `placement` maps fragment-local coordinates into the world: points go to
    R^T x + c (the camera-to-world reading of the pose).  Bounds grow to
    contain the placed fragment if needed.
    """
    Rcw = quat_to_mat(placement.rotation).T
    c = placement.translation
    if len(fragment) == 0:
        new_means = np.zeros((0, 3))
        new_rots = np.zeros((0, 4))
    else:
        new_means = fragment.means.astype(np.float64) @ Rcw.T + c
        from .geometry import mat_to_quat  # local import avoids cycle at module load
        new_rots = np.array([
            mat_to_quat(Rcw @ quat_to_mat(q)) for q in fragment.rotations
        ])
    means = np.concatenate([scene.means,
                            new_means.astype(np.float32)]).astype(np.float32)
    scales = np.concatenate([scene.scales, fragment.scales])
    rots = np.concatenate([scene.rotations.astype(np.float64), new_rots])
    colors = np.concatenate([scene.colors, fragment.colors])
    ops = np.concatenate([scene.opacities, fragment.opacities])
    # grow bounds in float32 space so the containment invariant holds exactly
    lo = np.minimum(scene.bounds_min, means.min(axis=0))
    hi = np.maximum(scene.bounds_max, means.max(axis=0))
    return Scene(means, scales, rots, colors, ops, scene.background, lo, hi)
