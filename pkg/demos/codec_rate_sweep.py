#!/usr/bin/env python3
"""Sweep the block codec's quality knob on a rendered image.

Encodes one rendered frame at a range of qualities, both as a direct image
and as a pose residual, and prints bytes / bits-per-pixel / PSNR so the
rate-distortion trade-off is visible at a glance.

Usage:
    python demos/codec_rate_sweep.py --qualities 10 30 50 70 90 100
"""

import argparse

import numpy as np

from splatlink.codec import (CodecParams, decode_image_direct,
                             decode_residual, encode_image_direct,
                             encode_residual)
from splatlink.geometry import Intrinsics, Pose, look_rotation, perturb_pose_axis
from splatlink.image import Image
from splatlink.metrics import mse, psnr
from splatlink.renderer import render
from splatlink.scene import generate_synthetic_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=150)
    ap.add_argument("--width", type=int, default=320)
    ap.add_argument("--height", type=int, default=180)
    ap.add_argument("--qualities", type=int, nargs="+",
                    default=[10, 30, 50, 70, 90, 100])
    args = ap.parse_args()

    bounds = (np.array([-1.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0]))
    scene = generate_synthetic_scene(args.seed, args.count, bounds)
    intr = Intrinsics(240.0, 240.0, args.width / 2.0, args.height / 2.0,
                      args.width, args.height)
    pose = Pose(look_rotation([0.0, 0.0, -1.0]), np.array([0.0, 0.0, 2.5]))
    camera = render(scene, pose, intr)
    raw = args.width * args.height * 3

    # a small pose error produces the kind of residual the encoder transmits
    rng = np.random.default_rng(args.seed)
    off_pose = perturb_pose_axis(pose, rng, "rotation", 1.0)
    base = render(scene, off_pose, intr)
    residual = np.clip(camera.pixels - base.pixels, -1.0, 1.0)

    print(f"raw frame: {raw} bytes ({args.width}x{args.height}x3)")
    print("quality  direct_bytes  direct_bpp  direct_psnr  "
          "residual_bytes  recon_psnr")
    for q in args.qualities:
        params = CodecParams(quality=q)
        blob = encode_image_direct(camera, params)
        direct_psnr = psnr(mse(camera, decode_image_direct(blob)))

        res_blob = encode_residual(residual, params)
        recon = Image(np.clip(base.pixels + decode_residual(res_blob), 0, 1))
        recon_psnr = psnr(mse(camera, recon))

        bpp = 8.0 * len(blob) / (args.width * args.height)
        print(f"{q:7d} {len(blob):13d} {bpp:11.3f} {direct_psnr:12.2f} "
              f"{len(res_blob):15d} {recon_psnr:11.2f}")


if __name__ == "__main__":
    main()
