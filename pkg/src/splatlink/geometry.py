"""SE(3) pose algebra, pinhole projection and trajectory synthesis.

Conventions used everywhere in this package:

* ``Pose.rotation`` is a unit quaternion (w, x, y, z) mapping world
  coordinates into the camera frame.
* ``Pose.translation`` is the camera center expressed in world
  coordinates, so a world point ``x`` lands at ``R @ (x - c)`` in the
  camera frame.
* A ``Twist`` is a 6-vector ``(wx, wy, wz, vx, vy, vz)`` -- rotation
  (axis-angle, radians) first, translation second.  Twists act on the
  left: ``apply_twist(t, p) = exp(t) * p``.
* The camera frame is +x right, +y down, +z forward.
"""

from dataclasses import dataclass

import numpy as np

NEAR_PLANE = 0.1

_EPS_ANGLE = 1e-8


# --------------------------------------------------------------------------
# quaternion helpers


def quat_normalize(q):
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q)


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_to_mat(q):
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def mat_to_quat(m):
    """Rotation matrix to unit quaternion (w >= 0 branch)."""
    m = np.asarray(m, dtype=np.float64)
    tr = np.trace(m)
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(m[i, i] - m[j, j] - m[k, k] + 1.0, 0.0)) * 2
        q = np.empty(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def skew(v):
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


# --------------------------------------------------------------------------
# pose


@dataclass(frozen=True)
class Pose:
    """Camera extrinsics: world-to-camera rotation plus camera center."""

    rotation: np.ndarray    # unit quaternion (w, x, y, z)
    translation: np.ndarray  # camera center in world coordinates

    def __post_init__(self):
        object.__setattr__(self, "rotation",
                           np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "translation",
                           np.asarray(self.translation, dtype=np.float64))
        n = np.linalg.norm(self.rotation)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {n} not within 1e-6 of 1")

    def matrix(self):
        """4x4 homogeneous world-to-camera transform."""
        R = quat_to_mat(self.rotation)
        T = np.eye(4)
        T[:3, :3] = R
        T[:3, 3] = -R @ self.translation
        return T

    def to_text(self):
        """Text form ``qw qx qy qz tx ty tz``."""
        vals = np.concatenate([self.rotation, self.translation])
        return " ".join(repr(float(v)) for v in vals)

    @staticmethod
    def from_text(text):
        vals = [float(tok) for tok in text.split()]
        if len(vals) != 7:
            raise ValueError("pose text form needs 7 numbers")
        return Pose(quat_normalize(vals[:4]), np.array(vals[4:]))


def identity_pose():
    return Pose(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))


def pose_from_matrix(T):
    R = T[:3, :3]
    c = -R.T @ T[:3, 3]
    return Pose(mat_to_quat(R), c)


def pose_compose(a: Pose, b: Pose) -> Pose:
    """Pose applying b first, then a (matrix product a @ b)."""
    return pose_from_matrix(a.matrix() @ b.matrix())


def pose_inverse(p: Pose) -> Pose:
    return pose_from_matrix(np.linalg.inv(p.matrix()))


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside image")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")


# --------------------------------------------------------------------------
# se(3) exponential / logarithm


def _so3_coeffs(theta):
    """(sin t / t, (1 - cos t) / t^2, (t - sin t) / t^3) with series fallback."""
    if theta < _EPS_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0
    return (np.sin(theta) / theta,
            (1.0 - np.cos(theta)) / theta ** 2,
            (theta - np.sin(theta)) / theta ** 3)


def se3_exp(twist) -> Pose:
    """Exponential map from twist coordinates to a Pose."""
    t = np.asarray(twist, dtype=np.float64)
    w, v = t[:3], t[3:]
    theta = np.linalg.norm(w)
    W = skew(w)
    a, b, c = _so3_coeffs(theta)
    R = np.eye(3) + a * W + b * (W @ W)
    V = np.eye(3) + b * W + c * (W @ W)
    T = np.eye(4)
    T[:3, :3] = R
    T[:3, 3] = V @ v
    return pose_from_matrix(T)


def _rot_log(q):
    """Axis-angle vector of a unit quaternion, canonical branch angle < pi."""
    w, xyz = q[0], np.asarray(q[1:])
    if w < 0:
        w, xyz = -w, -xyz
    n = np.linalg.norm(xyz)
    angle = 2.0 * np.arctan2(n, w)
    if n < _EPS_ANGLE:
        # small angle: q ~ (1, w/2) so axis*angle ~ 2*xyz
        return 2.0 * xyz / max(w, _EPS_ANGLE)
    return xyz / n * angle


def se3_log(p: Pose):
    """Logarithm map, inverse of :func:`se3_exp` for angles < pi."""
    w = _rot_log(p.rotation)
    theta = np.linalg.norm(w)
    W = skew(w)
    if theta < _EPS_ANGLE:
        Vinv = np.eye(3) - 0.5 * W + (1.0 / 12.0) * (W @ W)
    else:
        a, b, _ = _so3_coeffs(theta)
        # V^-1 = I - W/2 + (1 - a/(2b)) / theta^2 * W^2, a = sin(t)/t
        coef = (1.0 - a / (2.0 * b)) / theta ** 2
        Vinv = np.eye(3) - 0.5 * W + coef * (W @ W)
    t = p.matrix()[:3, 3]
    return np.concatenate([w, Vinv @ t])


def apply_twist(twist, base: Pose) -> Pose:
    """Left-apply a twist to a base pose: exp(twist) * base."""
    return pose_compose(se3_exp(twist), base)


def se3_adjoint_bracket(t):
    """ad matrix of a twist in (w, v) ordering."""
    w, v = t[:3], t[3:]
    ad = np.zeros((6, 6))
    ad[:3, :3] = skew(w)
    ad[3:, 3:] = skew(w)
    ad[3:, :3] = skew(v)
    return ad


def se3_left_jacobian(twist):
    """Left Jacobian J with exp(t + d) = exp(J @ d) * exp(t) to first order.

    Computed by the convergent series sum ad^n / (n+1)!.
    """
    ad = se3_adjoint_bracket(np.asarray(twist, dtype=np.float64))
    J = np.eye(6)
    term = np.eye(6)
    for n in range(1, 40):
        term = term @ ad / (n + 1)
        J = J + term
        if np.max(np.abs(term)) < 1e-17:
            break
    return J


# --------------------------------------------------------------------------
# projection


def project_point(pose: Pose, intr: Intrinsics, point, near=NEAR_PLANE):
    """Pinhole projection: ((px, py), depth) or None when behind the camera."""
    R = quat_to_mat(pose.rotation)
    xc = R @ (np.asarray(point, dtype=np.float64) - pose.translation)
    if xc[2] <= near:
        return None
    px = intr.fx * xc[0] / xc[2] + intr.cx
    py = intr.fy * xc[1] / xc[2] + intr.cy
    return np.array([px, py]), float(xc[2])


# --------------------------------------------------------------------------
# perturbations and error metrics


def _axis_rotation_quat(axis_index, angle_rad):
    q = np.zeros(4)
    q[0] = np.cos(angle_rad / 2.0)
    q[1 + axis_index] = np.sin(angle_rad / 2.0)
    return q


def rotate_pose(pose: Pose, axis_index, angle_rad) -> Pose:
    """Rotate the camera about one of its own axes, keeping the center fixed."""
    dq = _axis_rotation_quat(axis_index, angle_rad)
    return Pose(quat_normalize(quat_mul(dq, pose.rotation)), pose.translation)


def translate_pose(pose: Pose, offset) -> Pose:
    return Pose(pose.rotation, pose.translation + np.asarray(offset, dtype=np.float64))


def perturb_pose(pose: Pose, rng, trans_range, rot_range_deg) -> Pose:
    """Perturb exactly one axis of one kind (translation or rotation).

    The kind is chosen uniformly, the axis uniformly among x/y/z, and the
    magnitude uniformly in [-range, +range].
    """
    if trans_range < 0 or rot_range_deg < 0:
        raise ValueError("perturbation ranges must be >= 0")
    kind = int(rng.integers(2))
    axis = int(rng.integers(3))
    u = float(rng.uniform(-1.0, 1.0))
    if kind == 0:
        offset = np.zeros(3)
        offset[axis] = u * trans_range
        return translate_pose(pose, offset)
    return rotate_pose(pose, axis, np.deg2rad(u * rot_range_deg))


def perturb_pose_axis(pose: Pose, rng, kind, magnitude) -> Pose:
    """Perturb by a fixed magnitude (random axis, random sign) of one kind.

    kind is "translation" (scene units) or "rotation" (degrees); used by the
    perturbation-sweep harness where the magnitude is a grid value.
    """
    axis = int(rng.integers(3))
    sign = 1.0 if rng.integers(2) else -1.0
    if kind == "translation":
        offset = np.zeros(3)
        offset[axis] = sign * magnitude
        return translate_pose(pose, offset)
    if kind == "rotation":
        return rotate_pose(pose, axis, np.deg2rad(sign * magnitude))
    raise ValueError(f"unknown perturbation kind {kind!r}")


def pose_error(a: Pose, b: Pose):
    """(rotation error in degrees, translation error in scene units)."""
    dq = quat_mul(a.rotation, np.array([b.rotation[0], *(-b.rotation[1:])]))
    w = min(abs(float(dq[0])), 1.0)
    rot_deg = np.rad2deg(2.0 * np.arccos(w))
    trans = float(np.linalg.norm(a.translation - b.translation))
    return float(rot_deg), trans


# --------------------------------------------------------------------------
# trajectories


def look_rotation(forward, up=(0.0, 1.0, 0.0)):
    """World-to-camera quaternion for a camera looking along `forward`."""
    f = np.asarray(forward, dtype=np.float64)
    f = f / np.linalg.norm(f)
    r = np.cross(f, np.asarray(up, dtype=np.float64))
    n = np.linalg.norm(r)
    if n < 1e-12:
        r = np.cross(f, np.array([1.0, 0.0, 0.0]))
        n = np.linalg.norm(r)
    r = r / n
    d = np.cross(f, r)
    R = np.stack([r, d, f])
    return mat_to_quat(R)


def generate_lawnmower_trajectory(bounds, standoff, rows, steps):
    """Boustrophedon survey path facing the scene.

    Camera positions sweep a plane at `standoff` from the near face of the
    bounds, serpentine over `rows` x `steps` stations.  Step sizes are capped
    at standoff/10 so consecutive poses differ by small increments.
    """
    if rows < 1 or steps < 2:
        raise ValueError("need rows >= 1 and steps >= 2")
    lo = np.asarray(bounds[0], dtype=np.float64)
    hi = np.asarray(bounds[1], dtype=np.float64)
    center = 0.5 * (lo + hi)
    ext = hi - lo
    max_step = 0.099 * standoff
    dx = min(ext[0] / (steps - 1), max_step) if steps > 1 else 0.0
    dy = min(ext[1] / (rows - 1), max_step) if rows > 1 else 0.0
    xs0 = center[0] - dx * (steps - 1) / 2.0
    ys0 = center[1] - dy * (rows - 1) / 2.0
    z = hi[2] + standoff
    q = look_rotation(center - np.array([center[0], center[1], z]))
    poses = []
    for j in range(rows):
        cols = range(steps) if j % 2 == 0 else range(steps - 1, -1, -1)
        for i in cols:
            c = np.array([xs0 + dx * i, ys0 + dy * j, z])
            poses.append(Pose(q, c))
    return poses
