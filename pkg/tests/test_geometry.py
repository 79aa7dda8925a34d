import numpy as np
import pytest
from scipy import stats

from splatlink.geometry import (Intrinsics, Pose, generate_lawnmower_trajectory,
                                identity_pose, perturb_pose, pose_compose,
                                pose_error, pose_inverse, project_point,
                                quat_to_mat, se3_exp, se3_log)

from conftest import UNIT_BOUNDS, front_pose, small_intrinsics


def random_pose(rng):
    q = rng.normal(size=4)
    return Pose(q / np.linalg.norm(q), rng.normal(size=3))


def test_exp_zero_twist_identity():
    p = se3_exp(np.zeros(6))
    assert np.allclose(p.matrix(), np.eye(4), atol=1e-15)


def test_exp_pure_translation():
    p = se3_exp(np.array([0.0, 0.0, 0.0, 1.0, 2.0, 3.0]))
    assert np.allclose(quat_to_mat(p.rotation), np.eye(3), atol=1e-15)
    # twist v is the matrix translation; the stored center is -v for R = I
    m = p.matrix()
    assert np.allclose(m[:3, 3], [1.0, 2.0, 3.0], atol=1e-12)
    assert np.allclose(p.translation, [-1.0, -2.0, -3.0], atol=1e-12)


def test_exp_log_round_trip_sweep():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        w = rng.normal(size=3)
        w *= rng.uniform(0, 2.99) / np.linalg.norm(w)
        t = np.concatenate([w, rng.normal(size=3)])
        worst = max(worst, np.max(np.abs(se3_log(se3_exp(t)) - t)))
    assert worst < 1e-9


def test_log_exp_round_trip_on_poses():
    rng = np.random.default_rng(12)
    for _ in range(200):
        p = random_pose(rng)
        q = se3_exp(se3_log(p))
        assert np.allclose(q.matrix(), p.matrix(), atol=1e-9)


def test_compose_identity():
    rng = np.random.default_rng(0)
    p = random_pose(rng)
    q = pose_compose(identity_pose(), p)
    assert np.allclose(q.matrix(), p.matrix(), atol=1e-12)


def test_compose_inverse():
    rng = np.random.default_rng(1)
    p = random_pose(rng)
    q = pose_compose(p, pose_inverse(p))
    assert np.allclose(q.matrix(), np.eye(4), atol=1e-9)


def test_compose_associative():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a, b, c = (random_pose(rng) for _ in range(3))
        left = pose_compose(pose_compose(a, b), c).matrix()
        right = pose_compose(a, pose_compose(b, c)).matrix()
        assert np.allclose(left, right, atol=1e-9)


def test_project_point_on_axis():
    intr = small_intrinsics()
    pose = front_pose(2.0)
    res = project_point(pose, intr, np.array([0.0, 0.0, -1.0]))
    assert res is not None
    px, depth = res
    assert np.allclose(px, [intr.cx, intr.cy], atol=1e-12)
    assert abs(depth - 3.0) < 1e-12


def test_project_point_behind():
    assert project_point(front_pose(2.0), small_intrinsics(),
                         np.array([0.0, 0.0, 5.0])) is None


def test_project_point_matrix_oracle():
    rng = np.random.default_rng(5)
    intr = small_intrinsics()
    for _ in range(100):
        pose = random_pose(rng)
        point = rng.normal(size=3)
        R = quat_to_mat(pose.rotation)
        xc = R @ (point - pose.translation)
        got = project_point(pose, intr, point)
        if xc[2] <= 0.1:
            assert got is None
            continue
        expect = np.array([intr.fx * xc[0] / xc[2] + intr.cx,
                           intr.fy * xc[1] / xc[2] + intr.cy])
        assert got is not None
        assert np.max(np.abs(got[0] - expect)) < 1e-9
        assert abs(got[1] - xc[2]) < 1e-12


def test_perturb_zero_ranges_identity():
    rng = np.random.default_rng(3)
    p = front_pose()
    q = perturb_pose(p, rng, 0.0, 0.0)
    assert pose_error(p, q) == (0.0, 0.0)


def test_perturb_paper_envelope():
    # ranges from the sampling protocol: 1.58 units translation, 40 deg
    rng = np.random.default_rng(4)
    p = front_pose()
    for _ in range(500):
        q = perturb_pose(p, rng, 1.58, 40.0)
        rot, tr = pose_error(p, q)
        assert rot <= 40.0 + 1e-9 and tr <= 1.58 + 1e-9
        # exactly one kind moved
        assert (rot < 1e-9) != (tr < 1e-9) or (rot < 1e-9 and tr < 1e-9)


def test_perturb_statistics():
    rng = np.random.default_rng(5)
    p = front_pose()
    kinds = []
    mags = []
    for _ in range(10000):
        q = perturb_pose(p, rng, 1.58, 40.0)
        rot, tr = pose_error(p, q)
        if tr > rot / 40.0 * 1.58:
            kinds.append(0)
            mags.append(tr / 1.58)
        else:
            kinds.append(1)
            mags.append(rot / 40.0)
    n0 = kinds.count(0)
    # kind split within 3 sigma of 50/50
    assert abs(n0 - 5000) <= 3 * 0.5 * np.sqrt(10000)
    # |magnitude| uniform on [0, 1] (sampled on [-r, r], error metrics fold sign)
    assert stats.kstest(mags, "uniform").pvalue > 0.01


def test_pose_error_examples():
    p = front_pose()
    assert pose_error(p, p) == (0.0, 0.0)
    from splatlink.geometry import rotate_pose
    q = rotate_pose(p, 0, np.deg2rad(5.0))
    rot, tr = pose_error(p, q)
    assert abs(rot - 5.0) < 1e-9 and tr < 1e-12


def test_pose_error_quaternion_angle_oracle():
    rng = np.random.default_rng(6)
    for _ in range(200):
        a, b = random_pose(rng), random_pose(rng)
        rot, tr = pose_error(a, b)
        dot = abs(float(a.rotation @ b.rotation))
        expect = np.rad2deg(2.0 * np.arccos(min(dot, 1.0)))
        assert abs(rot - expect) < 1e-9
        assert abs(tr - np.linalg.norm(a.translation - b.translation)) < 1e-12
        assert pose_error(b, a) == (rot, tr)


def test_lawnmower_single_row():
    poses = generate_lawnmower_trajectory(UNIT_BOUNDS, 2.5, 1, 5)
    assert len(poses) == 5
    pts = np.array([p.translation for p in poses])
    d = pts[1:] - pts[:-1]
    assert np.allclose(d, d[0], atol=1e-12)  # straight pass


def test_lawnmower_serpentine_count():
    poses = generate_lawnmower_trajectory(UNIT_BOUNDS, 2.5, 2, 2)
    assert len(poses) == 4
    pts = np.array([p.translation for p in poses])
    # serpentine: second row traversed in the reverse x direction
    assert np.sign(pts[1][0] - pts[0][0]) == -np.sign(pts[3][0] - pts[2][0])


def test_lawnmower_increment_bounds():
    standoff = 2.5
    poses = generate_lawnmower_trajectory(UNIT_BOUNDS, standoff, 4, 30)
    for a, b in zip(poses, poses[1:]):
        rot, tr = pose_error(a, b)
        assert rot < 5.0
        assert tr < standoff / 10.0
