import numpy as np
import pytest

from splatlink import codec
from splatlink.codec import (CodecParams, CodecParseError, DomainError,
                             decode, decode_image_direct, decode_residual,
                             encode, encode_image_direct, encode_residual,
                             residual_dequantize, residual_quantize)
from splatlink.geometry import apply_twist
from splatlink.image import Image
from splatlink.metrics import mse, psnr
from splatlink.renderer import render
from splatlink.scene import generate_synthetic_scene

from conftest import UNIT_BOUNDS, front_pose, small_intrinsics


def smooth_render(width=320, height=180):
    scene = generate_synthetic_scene(7, 80, UNIT_BOUNDS)
    return render(scene, front_pose(), small_intrinsics(width, height, focal=240))


# ---------------------------------------------------------------- residual map


def test_residual_quantize_fixed_points():
    assert residual_quantize(np.array([0.0]))[0] == 128
    assert residual_quantize(np.array([-1.0]))[0] == 0
    assert residual_quantize(np.array([1.0]))[0] == 255
    assert residual_dequantize(np.array([0], dtype=np.uint8))[0] == -1.0


def test_residual_round_trip_bound():
    rng = np.random.default_rng(0)
    r = rng.uniform(-1, 1, size=4096)
    back = residual_dequantize(residual_quantize(r))
    assert np.max(np.abs(back - r)) <= 0.5 / 127.5 + 1e-12


def test_residual_domain_errors():
    with pytest.raises(DomainError):
        residual_quantize(np.array([1.0001]))
    with pytest.raises(DomainError):
        residual_quantize(np.array([np.nan]))


# ---------------------------------------------------------------- size floors


def test_zero_residual_floor_320x180():
    blob = encode_residual(np.zeros((180, 320, 3)), CodecParams(quality=50))
    assert len(blob) == 700
    assert len(blob) / (320 * 180) <= 0.02
    back = decode_residual(blob)
    assert np.max(np.abs(back)) <= 0.5 / 127.5 + 1e-12


def test_zero_residual_floor_small():
    blob = encode_residual(np.zeros((90, 160, 3)), CodecParams(quality=50))
    assert len(blob) == 190


# ---------------------------------------------------------------- lossless


def test_lossless_round_trip_random_planes():
    rng = np.random.default_rng(1)
    for _ in range(100):
        h, w = int(rng.integers(1, 40)), int(rng.integers(1, 40))
        planes = [rng.integers(0, 256, size=(h, w)).astype(np.uint8)
                  for _ in range(3)]
        out, params = decode(encode(planes, CodecParams(mode="lossless")))
        assert params.mode == "lossless"
        for a, b in zip(planes, out):
            assert np.array_equal(a, b)


def test_quality_100_lossy_near_exact_on_smooth():
    img = smooth_render(160, 90)
    back = decode_image_direct(encode_image_direct(img, CodecParams(quality=100)))
    assert psnr(mse(img, back)) > 50.0


# ---------------------------------------------------------------- lossy quality


def test_lossy_smooth_image_quality():
    img = smooth_render()
    back = decode_image_direct(encode_image_direct(img, CodecParams(quality=90)))
    assert psnr(mse(img, back)) >= 35.0


def test_lossy_default_quality():
    img = smooth_render(160, 90)
    back = decode_image_direct(encode_image_direct(img, CodecParams(quality=75)))
    assert psnr(mse(img, back)) >= 30.0


def test_quality_monotone_size_and_psnr():
    img = smooth_render(160, 90)
    sizes, errs = [], []
    for q in (10, 30, 50, 70, 90):
        blob = encode_image_direct(img, CodecParams(quality=q))
        sizes.append(len(blob))
        errs.append(mse(img, decode_image_direct(blob)))
    assert sizes == sorted(sizes)
    assert errs == sorted(errs, reverse=True)


def test_residual_energy_ordering():
    rng = np.random.default_rng(2)
    base = rng.normal(scale=1.0, size=(96, 128, 3))
    base = np.clip(base, -1, 1)
    sizes = [len(encode_residual(base * s, CodecParams(quality=50)))
             for s in (0.0, 0.1, 0.4, 1.0)]
    # allow one run/level token of slack per step
    for small, big in zip(sizes, sizes[1:]):
        assert small <= big + 8


def test_constant_direct_image_small():
    # A constant image costs one DC token per block on top of the floor.
    img = Image(np.full((90, 160, 3), 0.25))
    blob = encode_image_direct(img, CodecParams(quality=50))
    n_blocks = (90 // 8 + 1) * (160 // 8) * 3
    assert len(blob) <= 190 + 2 * n_blocks
    assert mse(img, decode_image_direct(blob)) < 1e-3


# ---------------------------------------------------------------- error paths


def test_parse_error_reports_offset():
    with pytest.raises(CodecParseError) as exc:
        decode(b"XXCD" + bytes(20))
    assert exc.value.byte_offset == 0
    with pytest.raises(CodecParseError) as exc:
        decode(b"\x01\x02")
    assert exc.value.byte_offset == 2


def test_truncated_stream_rejected():
    img = smooth_render(64, 48)
    blob = encode_image_direct(img, CodecParams(quality=75))
    with pytest.raises(CodecParseError):
        decode(blob[: len(blob) // 2])


def test_trailing_junk_tolerated():
    planes = [np.full((16, 16), 7, dtype=np.uint8)] * 3
    blob = encode(planes, CodecParams(mode="lossless"))
    out, _ = decode(blob + b"\x00garbage")
    assert all(np.array_equal(p, q) for p, q in zip(planes, out))


def test_bad_inputs_rejected():
    with pytest.raises(codec.CodecError):
        encode([np.zeros((8, 8), dtype=np.uint8)] * 2, CodecParams())
    with pytest.raises(ValueError):
        CodecParams(quality=0)
    with pytest.raises(ValueError):
        CodecParams(mode="fast")


# ---------------------------------------------------------------- end to end


def test_residual_path_matches_reference():
    scene = generate_synthetic_scene(3, 60, UNIT_BOUNDS)
    intr = small_intrinsics()
    pose = front_pose()
    truth = render(scene, apply_twist(np.array([0, 0, 0, 0.01, 0, 0.0]), pose), intr)
    pred = render(scene, pose, intr)
    residual = np.clip((truth.pixels - pred.pixels) / 2.0, -1, 1)
    back = decode_residual(encode_residual(residual, CodecParams(quality=90)))
    recon = Image(np.clip(pred.pixels + 2.0 * back, 0, 1))
    assert psnr(mse(truth, recon)) > 35.0
