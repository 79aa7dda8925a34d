"""Gaussian-splat-prior image compression for bandwidth-limited links.

A shared synthetic Gaussian scene acts as the prior on both sides of the
link.  Each camera frame is encoded as an optimized 6-DOF camera pose (found
by gradient descent through a differentiable splat renderer) plus a lossily
compressed residual image, framed into a CRC-checked packet sized for a
low-rate acoustic channel.
"""

from .codec import (CodecParams, decode, decode_image_direct, decode_residual,
                    encode, encode_image_direct, encode_residual,
                    residual_dequantize, residual_quantize)
from .encoder import (EncoderState, FrameEncoding, FrameStats,
                      OdometryEstimator, encode_frame, estimate_pose,
                      initialize_pose)
from .geometry import (Intrinsics, Pose, apply_twist,
                       generate_lawnmower_trajectory, identity_pose,
                       perturb_pose, pose_compose, pose_error, pose_inverse,
                       project_point, se3_exp, se3_log)
from .image import Image, load_ppm, save_ppm
from .metrics import (InsufficientMatches, Keypoint, MatchConfig,
                      detect_keypoints, matching_loss, mse, psnr)
from .optimizers import (NumericalFailure, OptimOptions, OptimizationResult,
                         minimize_adam, minimize_bfgs, minimize_hybrid)
from .protocol import (FramePacket, LinkReport, decode_frame, parse_packet,
                       serialize_packet, simulate_link)
from .renderer import Splat2D, loss_and_grad, project_gaussian, render
from .scene import (Gaussian3D, Scene, add_novel_object,
                    generate_synthetic_scene, load_scene, save_scene)
from .studies import (StudyConfig, run_compression_benchmark,
                      run_perturbation_study, run_robustness_study)

__version__ = "0.1.0"
