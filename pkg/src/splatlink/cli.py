"""Command-line front end.

Subcommands: ``scene gen``, ``study perturb|benchmark|robust``, ``encode``,
``decode``, ``link sim``.  CSV goes to stdout or --out-dir files; images are
binary PPM.
"""

import argparse
import os
import sys

import numpy as np

from . import studies
from .codec import CodecParams
from .encoder import EncoderState, encode_frame
from .geometry import Intrinsics, Pose
from .image import load_ppm, save_ppm
from .optimizers import OptimOptions
from .protocol import (link_report_csv, parse_packet, serialize_packet,
                       simulate_link)
from .scene import generate_synthetic_scene, load_scene, save_scene
from .studies import StudyConfig, rows_to_csv


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--quality", type=int, default=90)
    p.add_argument("--optimizer", choices=["bfgs", "adam", "hybrid"],
                   default="bfgs")
    p.add_argument("--objective", choices=["mse", "matching"], default="mse")


def _intrinsics(args):
    return Intrinsics(args.focal, args.focal, args.width / 2.0,
                      args.height / 2.0, args.width, args.height)


def _emit(args, name, text):
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        path = os.path.join(args.out_dir, name)
        with open(path, "w") as f:
            f.write(text)
        print(path)
    else:
        sys.stdout.write(text)


def _study_config(args):
    return StudyConfig(seed=args.seed, optimizer=args.optimizer,
                       objective=args.objective, quality=args.quality,
                       trials=getattr(args, "trials", 25),
                       frames=getattr(args, "frames", 100),
                       width=getattr(args, "width", 160),
                       height=getattr(args, "height", 90))


def main(argv=None):
    parser = argparse.ArgumentParser(prog="splatlink")
    sub = parser.add_subparsers(dest="command", required=True)

    p_scene = sub.add_parser("scene", help="scene utilities")
    scene_sub = p_scene.add_subparsers(dest="scene_command", required=True)
    p_gen = scene_sub.add_parser("gen", help="generate a synthetic scene")
    _add_common(p_gen)
    p_gen.add_argument("--count", type=int, default=200)
    p_gen.add_argument("--style", default="scatter",
                       choices=["scatter", "lattice", "barrel-structure"])
    p_gen.add_argument("--output", required=True)

    p_study = sub.add_parser("study", help="run a study")
    study_sub = p_study.add_subparsers(dest="study_command", required=True)
    for name in ("perturb", "benchmark", "robust"):
        ps = study_sub.add_parser(name)
        _add_common(ps)
        ps.add_argument("--trials", type=int, default=25)
        ps.add_argument("--frames", type=int, default=100)
        ps.add_argument("--width", type=int, default=160)
        ps.add_argument("--height", type=int, default=90)

    p_enc = sub.add_parser("encode", help="encode one camera frame")
    _add_common(p_enc)
    p_enc.add_argument("--scene", required=True)
    p_enc.add_argument("--camera", required=True, help="camera frame (PPM)")
    p_enc.add_argument("--init-pose", required=True,
                       help='"qw qx qy qz tx ty tz"')
    p_enc.add_argument("--focal", type=float, default=120.0)
    p_enc.add_argument("--mode", choices=["invs", "no_opt"], default="invs")
    p_enc.add_argument("--output", required=True, help="packet file")

    p_dec = sub.add_parser("decode", help="decode a packet to an image")
    p_dec.add_argument("--scene", required=True)
    p_dec.add_argument("--packet", required=True)
    p_dec.add_argument("--focal", type=float, default=120.0)
    p_dec.add_argument("--width", type=int, default=160)
    p_dec.add_argument("--height", type=int, default=90)
    p_dec.add_argument("--output", required=True, help="reconstruction (PPM)")

    p_link = sub.add_parser("link", help="link accounting")
    link_sub = p_link.add_subparsers(dest="link_command", required=True)
    p_sim = link_sub.add_parser("sim")
    p_sim.add_argument("--bitrate", type=float, default=100_000.0)
    p_sim.add_argument("--overhead", type=int, default=0)
    p_sim.add_argument("--sizes", default=None,
                       help="comma-separated packet sizes in bytes")
    p_sim.add_argument("packets", nargs="*", help="packet files")
    p_sim.add_argument("--out-dir", default=None)

    args = parser.parse_args(argv)

    if args.command == "scene":
        bounds = (np.array([-1.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0]))
        scene = generate_synthetic_scene(args.seed, args.count, bounds, args.style)
        save_scene(scene, args.output)
        print(f"{args.output}: {len(scene)} gaussians")
        return 0

    if args.command == "study":
        cfg = _study_config(args)
        if args.study_command == "perturb":
            rows = studies.run_perturbation_study(cfg)
            _emit(args, "perturbation.csv",
                  rows_to_csv(rows, studies.PERTURB_HEADER))
        elif args.study_command == "benchmark":
            rows = studies.run_compression_benchmark(cfg)
            _emit(args, "benchmark.csv",
                  rows_to_csv(rows, studies.BENCHMARK_HEADER))
        else:
            rows = studies.run_robustness_study(cfg)
            _emit(args, "robustness.csv",
                  rows_to_csv(rows, studies.BENCHMARK_HEADER))
        return 0

    if args.command == "encode":
        scene = load_scene(args.scene)
        camera = load_ppm(args.camera)
        intr = Intrinsics(args.focal, args.focal, camera.width / 2.0,
                          camera.height / 2.0, camera.width, camera.height)
        init = Pose.from_text(args.init_pose)
        state = EncoderState(scene, intr, mode=args.mode,
                             objective=args.objective, optimizer=args.optimizer)
        enc, _ = encode_frame(state, camera, args.quality, init)
        with open(args.output, "wb") as f:
            f.write(serialize_packet(enc.to_packet()))
        s = enc.stats
        print(f"{args.output}: {s.bytes_total} bytes, "
              f"psnr {s.psnr_reconstructed:.2f} dB, "
              f"{s.iterations} iterations, init {enc.init_source}")
        return 0

    if args.command == "decode":
        from .protocol import decode_frame
        scene = load_scene(args.scene)
        with open(args.packet, "rb") as f:
            packet = parse_packet(f.read())
        intr = Intrinsics(args.focal, args.focal, args.width / 2.0,
                          args.height / 2.0, args.width, args.height)
        save_ppm(decode_frame(packet, scene, intr), args.output)
        print(args.output)
        return 0

    if args.command == "link":
        sizes = []
        if args.sizes:
            sizes.extend(int(s) for s in args.sizes.split(","))
        for path in args.packets:
            sizes.append(os.path.getsize(path))
        report = simulate_link(sizes, args.bitrate, args.overhead)
        text = link_report_csv(sizes, report)
        if args.out_dir:
            os.makedirs(args.out_dir, exist_ok=True)
            path = os.path.join(args.out_dir, "link.csv")
            with open(path, "w") as f:
                f.write(text)
            print(path)
        else:
            sys.stdout.write(text)
        print(f"# fps {report.fps!r} total_bytes {report.total_bytes}",
              file=sys.stderr)
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
