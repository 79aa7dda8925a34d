import numpy as np
import pytest

from splatlink.geometry import Pose, identity_pose, look_rotation
from splatlink.scene import (EmptyScene, Gaussian3D, InvalidBounds,
                             InvariantViolation, MalformedScene, Scene,
                             TruncatedScene, add_novel_object,
                             generate_synthetic_scene, load_scene, save_scene,
                             scene_from_bytes, scene_to_bytes)

from conftest import UNIT_BOUNDS


def test_generation_deterministic():
    a = generate_synthetic_scene(7, 200, UNIT_BOUNDS, "scatter")
    b = generate_synthetic_scene(7, 200, UNIT_BOUNDS, "scatter")
    assert np.array_equal(a.means, b.means)
    assert np.array_equal(a.scales, b.scales)
    assert np.array_equal(a.rotations, b.rotations)
    assert np.array_equal(a.colors, b.colors)
    assert np.array_equal(a.opacities, b.opacities)


def test_generation_zero_count():
    with pytest.raises(EmptyScene):
        generate_synthetic_scene(7, 0, UNIT_BOUNDS, "scatter")


def test_generation_degenerate_bounds():
    with pytest.raises(InvalidBounds):
        generate_synthetic_scene(7, 10, (np.ones(3), np.ones(3)))


@pytest.mark.parametrize("style", ["scatter", "lattice", "barrel-structure"])
def test_means_inside_bounds(style):
    s = generate_synthetic_scene(7, 200, UNIT_BOUNDS, style)
    for m in s.means:
        assert np.all(m >= s.bounds_min) and np.all(m <= s.bounds_max)


def test_gaussian_invariants():
    with pytest.raises(Exception):
        Gaussian3D(np.zeros(3), np.array([0.1, -0.1, 0.1]),
                   np.array([1.0, 0, 0, 0]), np.full(3, 0.5), 0.5)
    with pytest.raises(Exception):
        Gaussian3D(np.zeros(3), np.full(3, 0.1),
                   np.array([0.5, 0, 0, 0]), np.full(3, 0.5), 0.5)


def test_save_load_round_trip(tmp_path):
    s = generate_synthetic_scene(7, 200, UNIT_BOUNDS)
    path = tmp_path / "scene.gsc"
    save_scene(s, str(path))
    t = load_scene(str(path))
    for field in ("means", "scales", "rotations", "colors", "opacities",
                  "background", "bounds_min", "bounds_max"):
        assert np.array_equal(getattr(s, field), getattr(t, field)), field


def test_load_truncated():
    blob = scene_to_bytes(generate_synthetic_scene(7, 5, UNIT_BOUNDS))
    with pytest.raises(TruncatedScene):
        scene_from_bytes(blob[:-7])


def test_load_bad_magic():
    blob = scene_to_bytes(generate_synthetic_scene(7, 5, UNIT_BOUNDS))
    with pytest.raises(MalformedScene):
        scene_from_bytes(b"XXXX" + blob[4:])


def test_load_bad_quaternion():
    import struct
    blob = bytearray(scene_to_bytes(generate_synthetic_scene(7, 5, UNIT_BOUNDS)))
    struct.pack_into("<4f", blob, 8 + 6 * 4, 0.5, 0.0, 0.0, 0.0)
    with pytest.raises(InvariantViolation):
        scene_from_bytes(bytes(blob))


def _fragment(count, seed=3):
    from splatlink.studies import make_novel_fragment
    return make_novel_fragment(seed, count=count)


def test_add_novel_object_counts():
    base = generate_synthetic_scene(7, 200, UNIT_BOUNDS)
    out = add_novel_object(base, _fragment(30), identity_pose())
    assert len(out) == 230
    assert len(base) == 200  # input unmodified


def test_add_empty_fragment_identity():
    base = generate_synthetic_scene(7, 50, UNIT_BOUNDS)
    out = add_novel_object(base, _fragment(0), identity_pose())
    assert np.array_equal(out.means, base.means)
    assert np.array_equal(out.bounds_min, base.bounds_min)
    assert np.array_equal(out.bounds_max, base.bounds_max)


def test_add_fragment_outside_bounds_grows_box():
    base = generate_synthetic_scene(7, 50, UNIT_BOUNDS)
    placement = Pose(np.array([1.0, 0.0, 0.0, 0.0]), np.array([3.0, 0.0, 0.0]))
    out = add_novel_object(base, _fragment(10), placement)
    assert np.all(out.bounds_max >= base.bounds_max)
    for m in out.means:
        assert np.all(m >= out.bounds_min) and np.all(m <= out.bounds_max)
