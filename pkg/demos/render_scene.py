#!/usr/bin/env python3
"""Render a synthetic Gaussian-splat scene from a few viewpoints.

Generates a seeded scene, walks the lawnmower survey trajectory, renders a
handful of frames to PPM files and prints simple image statistics so a
first-time reader can see the renderer working end to end.

Usage:
    python demos/render_scene.py --seed 0 --count 200 --out-dir /tmp/renders
"""

import argparse
import os

import numpy as np

from splatlink.geometry import Intrinsics, generate_lawnmower_trajectory
from splatlink.image import save_ppm
from splatlink.renderer import render
from splatlink.scene import generate_synthetic_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--style", default="scatter",
                    choices=["scatter", "clusters", "shell"])
    ap.add_argument("--width", type=int, default=320)
    ap.add_argument("--height", type=int, default=180)
    ap.add_argument("--frames", type=int, default=6)
    ap.add_argument("--out-dir", default="/tmp/splatlink_renders")
    args = ap.parse_args()

    bounds = (np.array([-1.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0]))
    scene = generate_synthetic_scene(args.seed, args.count, bounds, args.style)
    print(f"scene: {len(scene)} gaussians, diameter {scene.diameter:.2f}")

    intr = Intrinsics(240.0, 240.0, args.width / 2.0, args.height / 2.0,
                      args.width, args.height)
    poses = generate_lawnmower_trajectory(scene.bounds, standoff=2.5,
                                          rows=2, steps=max(args.frames, 2))

    os.makedirs(args.out_dir, exist_ok=True)
    step = max(1, len(poses) // args.frames)
    for k, pose in enumerate(poses[::step][:args.frames]):
        img = render(scene, pose, intr)
        path = os.path.join(args.out_dir, f"frame_{k:02d}.ppm")
        save_ppm(img, path)
        px = img.pixels
        print(f"{path}: mean {px.mean():.3f}, min {px.min():.3f}, "
              f"max {px.max():.3f}")


if __name__ == "__main__":
    main()
