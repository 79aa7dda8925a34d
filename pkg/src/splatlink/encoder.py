"""Frame encoder: pose initialization, pose optimization through the
renderer, residual formation and packetization.

The encoder holds the shared scene prior and per-stream state.  Each frame
is encoded as an optimized camera pose (found by descending an image loss
through the differentiable renderer) plus a lossily coded residual between
the camera image and the render at that pose.  A no-optimization mode keeps
the odometry estimate unmodified, serving as the pose-plus-render baseline.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .codec import CodecParams, decode_residual, encode_residual
from .geometry import Intrinsics, Pose, apply_twist, perturb_pose_axis, se3_exp, se3_log
from .image import Image
from .metrics import MatchConfig, mse, psnr
from .optimizers import (NumericalFailure, OptimOptions, OptimizationResult,
                         minimize_adam, minimize_bfgs, minimize_hybrid)
from .protocol import FramePacket, serialize_packet
from .renderer import loss_and_grad, render
from .scene import Scene

_MINIMIZERS = {
    "bfgs": minimize_bfgs,
    "adam": minimize_adam,
    "hybrid": minimize_hybrid,
}

# loss returned for line-search probes where the matching objective is
# undefined (too few matches); finite so Wolfe backtracking can recover
BARRIER_LOSS = 1e6


def make_objective(prior, init_pose, camera, objective, match_cfg, intr):
    """Twist objective for the minimizers.

    A probe pose that loses the keypoint matches acts as a barrier rather
    than aborting the whole optimization; at the start twist the failure is
    genuine and propagates.
    """
    from .metrics import InsufficientMatches

    def f_and_grad(t):
        try:
            return loss_and_grad(prior, init_pose, t, camera,
                                 objective=objective, match_cfg=match_cfg,
                                 intr=intr)
        except InsufficientMatches:
            if not np.any(t):
                raise
            return BARRIER_LOSS, np.zeros(6)

    return f_and_grad


@dataclass
class OdometryEstimator:
    """Noisy-odometry stand-in for a learned pose estimator.

    Perturbs the true pose by a deterministic pseudo-random rotation (up to
    rot_noise_deg) and translation (up to trans_noise), seeded per frame.
    """

    rot_noise_deg: float = 2.0
    trans_noise: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.rot_noise_deg < 0 or self.trans_noise < 0:
            raise ValueError("noise magnitudes must be >= 0")

    def estimate(self, true_pose: Pose, frame_index: int) -> Pose:
        rng = np.random.default_rng([self.seed, frame_index])
        p = true_pose
        if self.trans_noise > 0:
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            p = Pose(p.rotation, p.translation
                     + direction * self.trans_noise * rng.uniform())
        if self.rot_noise_deg > 0:
            p = perturb_pose_axis(
                p, rng, "rotation", self.rot_noise_deg * rng.uniform())
        return p


def estimate_pose(est: OdometryEstimator, true_pose: Pose, frame_index: int) -> Pose:
    return est.estimate(true_pose, frame_index)


@dataclass
class FrameStats:
    iterations: int
    function_evals: int
    residual_energy: float
    psnr_rendered: float
    psnr_reconstructed: float
    bytes_total: int
    optimizer_failed: bool = False


@dataclass(frozen=True)
class FrameEncoding:
    pose: Pose
    pose_twist: np.ndarray   # float32 wire twist, exp of which is `pose`
    residual_bytes: bytes
    init_source: str         # "previous_frame" | "estimator"
    stats: FrameStats
    frame_id: int

    def to_packet(self) -> FramePacket:
        return FramePacket(self.frame_id, self.pose_twist,
                           residual_present=True, lossless=False,
                           residual=self.residual_bytes)


@dataclass
class EncoderState:
    prior: Scene
    intrinsics: Intrinsics
    prev_pose: Optional[Pose] = None
    prev_good: bool = False
    frame_index: int = 0
    mse_gate: float = 1e-3
    mode: str = "invs"           # "invs" | "no_opt"
    objective: str = "mse"       # "mse" | "matching"
    optimizer: str = "bfgs"      # "bfgs" | "adam" | "hybrid"
    optim_options: OptimOptions = field(default_factory=OptimOptions)
    match_config: MatchConfig = field(default_factory=MatchConfig)

    def __post_init__(self):
        if self.mse_gate <= 0:
            raise ValueError("mse_gate must be > 0")
        if self.prev_good and self.prev_pose is None:
            raise ValueError("prev_good without prev_pose")


def initialize_pose(state: EncoderState, camera: Image, estimator_pose: Pose):
    """Pick the optimization start: previous frame's pose if it still renders
    close enough to the current camera image, otherwise the estimator pose."""
    if state.prev_good and state.prev_pose is not None:
        rendered = render(state.prior, state.prev_pose, state.intrinsics)
        if mse(camera, rendered) < state.mse_gate:
            return state.prev_pose, "previous_frame"
    return estimator_pose, "estimator"


def encode_frame(state: EncoderState, camera: Image, quality: int,
                 estimator_pose: Pose):
    """Encode one camera frame; mutates and returns the stream state.

    Returns (FrameEncoding, state).  The transmitted pose is the float32
    wire twist round-tripped through exp, so the encoder-side residual is
    formed against exactly the render the decoder will produce.
    """
    if camera.width != state.intrinsics.width or camera.height != state.intrinsics.height:
        raise ValueError("camera dimensions do not match intrinsics")
    init_pose, init_source = initialize_pose(state, camera, estimator_pose)

    iterations = 0
    function_evals = 0
    failed = False
    if state.mode == "no_opt":
        pose_opt = estimator_pose
    else:
        from .metrics import InsufficientMatches
        f_and_grad = make_objective(state.prior, init_pose, camera,
                                    state.objective, state.match_config,
                                    state.intrinsics)
        try:
            result = _MINIMIZERS[state.optimizer](
                f_and_grad, np.zeros(6), state.optim_options)
            pose_opt = apply_twist(result.x, init_pose)
            iterations = result.iterations
            function_evals = result.function_evals
        except (NumericalFailure, InsufficientMatches):
            # the link must always emit a frame: degrade to the init pose
            pose_opt = init_pose
            failed = True

    # round-trip through the 24-byte wire form before rendering
    wire_twist = se3_log(pose_opt).astype(np.float32)
    pose_tx = se3_exp(wire_twist.astype(np.float64))

    rendered = render(state.prior, pose_tx, state.intrinsics)
    residual = camera.pixels - rendered.pixels
    residual_bytes = encode_residual(residual, CodecParams(quality=quality))
    recon = np.clip(rendered.pixels + decode_residual(residual_bytes), 0.0, 1.0)

    mse_rendered = mse(camera, rendered)
    stats = FrameStats(
        iterations=iterations,
        function_evals=function_evals,
        residual_energy=float(np.sum(residual * residual)),
        psnr_rendered=psnr(mse_rendered),
        psnr_reconstructed=psnr(mse(camera, Image(recon))),
        bytes_total=0,
        optimizer_failed=failed,
    )
    enc = FrameEncoding(pose_tx, wire_twist, residual_bytes, init_source,
                        stats, state.frame_index)
    stats.bytes_total = len(serialize_packet(enc.to_packet()))

    state.prev_pose = pose_tx
    state.prev_good = mse_rendered < state.mse_gate
    state.frame_index += 1
    return enc, state
