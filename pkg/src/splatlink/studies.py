"""Desk-scale study harness: perturbation sweeps, the compression benchmark,
and novel-object robustness, all emitting deterministic CSV rows.

Camera frames are synthesized renders of the (possibly augmented) world
scene, optionally with seeded pixel noise, so every study has ground truth
and is reproducible bitwise from its configuration.
"""

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .codec import CodecParams, decode_image_direct, encode_image_direct
from .encoder import EncoderState, OdometryEstimator, encode_frame
from .geometry import (Intrinsics, Pose, generate_lawnmower_trajectory,
                       identity_pose, perturb_pose_axis, translate_pose)
from .image import Image
from .metrics import InsufficientMatches, mse, psnr
from .optimizers import OptimOptions
from .protocol import FramePacket, serialize_packet
from .renderer import loss_and_grad, render
from .scene import Scene, add_novel_object, generate_synthetic_scene


@dataclass
class StudyConfig:
    seed: int = 0
    scene_count: int = 200
    scene_style: str = "scatter"
    bounds: tuple = ((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
    width: int = 160
    height: int = 90
    focal: float = 120.0
    standoff: float = 2.5
    rows: int = 4
    steps: int = 30
    rotation_grid_deg: tuple = (1.0, 2.0, 5.0, 10.0, 15.0, 25.0, 32.0, 40.0)
    translation_grid_frac: tuple = (0.005, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3)
    trials: int = 25
    optimizer: str = "bfgs"
    objective: str = "mse"
    quality: int = 90
    frames: int = 100
    estimator_rot_noise_deg: float = 2.0
    estimator_trans_noise: float = 0.02
    noise_sigma: float = 0.0
    benchmark_qualities: tuple = (90,)
    optim_options: OptimOptions = field(default_factory=OptimOptions)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.rotation_grid_deg or not self.translation_grid_frac:
            raise ValueError("perturbation grids must be non-empty")

    def intrinsics(self):
        return Intrinsics(self.focal, self.focal,
                          self.width / 2.0, self.height / 2.0,
                          self.width, self.height)

    def scene(self):
        return generate_synthetic_scene(self.seed, self.scene_count,
                                        (np.array(self.bounds[0]),
                                         np.array(self.bounds[1])),
                                        self.scene_style)

    def trajectory(self, scene):
        return generate_lawnmower_trajectory(scene.bounds, self.standoff,
                                             self.rows, self.steps)


def _camera_frame(scene, pose, intr, rng=None, noise_sigma=0.0):
    img = render(scene, pose, intr)
    if noise_sigma > 0 and rng is not None:
        noisy = img.pixels + rng.normal(0.0, noise_sigma, size=img.pixels.shape)
        return Image(np.clip(noisy, 0.0, 1.0))
    return img


# --------------------------------------------------------------------------
# perturbation study


PERTURB_HEADER = ["axis_kind", "magnitude", "trial", "objective", "optimizer",
                  "psnr_db", "residual_energy", "compressed_bytes",
                  "iterations", "failed"]


def run_perturbation_study(cfg: StudyConfig):
    """One row per (kind, magnitude, trial): optimize from a perturbed pose
    and record the post-optimization metrics."""
    from .optimizers import NumericalFailure
    from . import encoder as _enc

    scene = cfg.scene()
    intr = cfg.intrinsics()
    poses = cfg.trajectory(scene)
    diam = scene.diameter
    cells = ([("rotation", m) for m in cfg.rotation_grid_deg]
             + [("translation", f * diam) for f in cfg.translation_grid_frac])
    rows = []
    for kind, mag in cells:
        for trial in range(cfg.trials):
            kind_id = 0 if kind == "rotation" else 1
            rng = np.random.default_rng([cfg.seed, kind_id,
                                         int(mag * 1e6) & 0xFFFFFFFF, trial])
            pose = poses[int(rng.integers(len(poses)))]
            camera = _camera_frame(scene, pose, intr, rng, cfg.noise_sigma)
            init = perturb_pose_axis(pose, rng, kind, mag) if mag > 0 else pose
            row = {"axis_kind": kind, "magnitude": mag, "trial": trial,
                   "objective": cfg.objective, "optimizer": cfg.optimizer,
                   "failed": 0}
            try:
                f = _enc.make_objective(scene, init, camera, cfg.objective,
                                        None, intr)
                result = _enc._MINIMIZERS[cfg.optimizer](
                    f, np.zeros(6), cfg.optim_options)
                from .geometry import apply_twist
                pose_opt = apply_twist(result.x, init)
                rendered = render(scene, pose_opt, intr)
                residual = camera.pixels - rendered.pixels
                from .codec import encode_residual
                payload = encode_residual(residual, CodecParams(quality=cfg.quality))
                row.update(psnr_db=psnr(mse(camera, rendered)),
                           residual_energy=float(np.sum(residual ** 2)),
                           compressed_bytes=len(payload),
                           iterations=result.iterations)
            except (NumericalFailure, InsufficientMatches):
                row.update(psnr_db=0.0, residual_energy=float("nan"),
                           compressed_bytes=0, iterations=0, failed=1)
            rows.append(row)
    rows.sort(key=lambda r: (r["axis_kind"], r["magnitude"], r["trial"]))
    return rows


# --------------------------------------------------------------------------
# compression benchmark


BENCHMARK_HEADER = ["method", "quality", "compression_ratio", "mean_bytes",
                    "mean_psnr", "estimator_inits"]


def _run_stream(prior, world, cfg, intr, poses, quality, mode):
    """Run the packetized encoder over a trajectory; per-frame (bytes, psnr, src)."""
    est = OdometryEstimator(cfg.estimator_rot_noise_deg,
                            cfg.estimator_trans_noise, cfg.seed)
    state = EncoderState(prior, intr, mode=mode, objective=cfg.objective,
                         optimizer=cfg.optimizer, optim_options=cfg.optim_options)
    rng = np.random.default_rng([cfg.seed, 77])
    out = []
    for i, pose in enumerate(poses[:cfg.frames]):
        camera = _camera_frame(world, pose, intr, rng, cfg.noise_sigma)
        enc, state = encode_frame(state, camera, quality,
                                  est.estimate(pose, i))
        out.append((enc.stats.bytes_total, enc.stats.psnr_reconstructed,
                    enc.init_source, enc.stats.iterations))
    return out


def _run_direct(world, cfg, intr, poses, quality):
    """Classical baseline: compress each camera frame directly."""
    rng = np.random.default_rng([cfg.seed, 77])
    out = []
    for i, pose in enumerate(poses[:cfg.frames]):
        camera = _camera_frame(world, pose, intr, rng, cfg.noise_sigma)
        payload = encode_image_direct(camera, CodecParams(quality=quality))
        # identical packet framing for all methods keeps byte counts comparable
        pkt = FramePacket(i, np.zeros(6, dtype=np.float32), residual=payload)
        nbytes = len(serialize_packet(pkt))
        recon = decode_image_direct(payload)
        out.append((nbytes, psnr(mse(camera, recon)), "direct", 0))
    return out


def _summarize(method, quality, per_frame, raw_bytes):
    sizes = np.array([r[0] for r in per_frame], dtype=np.float64)
    psnrs = np.array([r[1] for r in per_frame], dtype=np.float64)
    finite = psnrs[np.isfinite(psnrs)]
    return {
        "method": method,
        "quality": quality,
        "compression_ratio": float(raw_bytes / sizes.mean()),
        "mean_bytes": float(sizes.mean()),
        "mean_psnr": float(finite.mean()) if finite.size else float("inf"),
        "estimator_inits": sum(1 for r in per_frame if r[2] == "estimator"),
    }


def run_compression_benchmark(cfg: StudyConfig, world=None):
    """direct / no_opt / invs over the same frames, one row per method x quality."""
    prior = cfg.scene()
    if world is None:
        world = prior
    intr = cfg.intrinsics()
    poses = cfg.trajectory(world)
    raw_bytes = cfg.width * cfg.height * 3
    rows = []
    for q in cfg.benchmark_qualities:
        rows.append(_summarize("direct", q, _run_direct(world, cfg, intr, poses, q),
                               raw_bytes))
        rows.append(_summarize("no_opt", q,
                               _run_stream(prior, world, cfg, intr, poses, q, "no_opt"),
                               raw_bytes))
        rows.append(_summarize("invs", q,
                               _run_stream(prior, world, cfg, intr, poses, q, "invs"),
                               raw_bytes))
    return rows


# --------------------------------------------------------------------------
# robustness study


def make_novel_fragment(seed, count=30, extent=0.25):
    """Small dense scene fragment standing in for a newly placed structure."""
    lo = np.array([-extent, -extent, -extent])
    hi = np.array([extent, extent, extent])
    if count == 0:
        return Scene(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 4)),
                     np.zeros((0, 3)), np.zeros(0), np.zeros(3), lo, hi)
    return generate_synthetic_scene(seed, count, (lo, hi), "scatter",
                                    background=(0.0, 0.0, 0.0))


def run_robustness_study(cfg: StudyConfig, fragment=None, placement=None):
    """Benchmark with a novel object in the world but not in the prior."""
    prior = cfg.scene()
    if fragment is None:
        fragment = make_novel_fragment(cfg.seed + 1)
    if placement is None:
        placement = translate_pose(identity_pose(),
                                   np.array([0.45, 0.0, 0.3]) * prior.diameter / 3.46)
    world = add_novel_object(prior, fragment, placement) if len(fragment) \
        else prior
    return run_compression_benchmark(cfg, world=world)


# --------------------------------------------------------------------------
# CSV emission


def rows_to_csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
