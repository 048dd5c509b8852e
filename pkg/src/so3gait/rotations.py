"""Rotation and translation primitives.

Rotations are stored as unit quaternions ``(w, x, y, z)`` with a canonical
sign (``w >= 0``), so two ``Rot3`` values compare equal exactly when their
stored components match.  All axes are hand-frame (extrinsic) axes: applying
``rot_about_axis(X, a)`` to an orientation ``R`` means ``Rx(a) @ R``.

The rotational distance used everywhere is the L2 norm of the wrapped
roll/pitch/yaw differences, with RPY taken in the extrinsic X-Y-Z convention
``R = Rz(yaw) Ry(pitch) Rx(roll)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterator, Sequence, Union

import numpy as np

TWO_PI = 2.0 * math.pi

# Half-angle sine below which the Z-X-Z middle angle is treated as 0 or pi.
_GIMBAL_EPS = 1e-12
# Slack when deciding whether k * sigma has reached pi.
_SCHEDULE_EPS = 1e-9


class Axis(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


_AXIS_INDEX = {Axis.X: 0, Axis.Y: 1, Axis.Z: 2}


def _canonicalize(q) -> tuple[float, float, float, float]:
    q = np.asarray(q, dtype=float).reshape(4)
    if not np.all(np.isfinite(q)):
        raise ValueError(f"quaternion has non-finite components: {q}")
    n = math.sqrt(float(q @ q))
    if n == 0.0:
        raise ValueError("zero quaternion is not a rotation")
    q = q / n
    # Sign convention: w > 0, or w == 0 and the first non-zero vector part > 0.
    for c in q:
        if c != 0.0:
            if c < 0.0:
                q = -q
            break
    return (float(q[0]), float(q[1]), float(q[2]), float(q[3]))


def _qmul(a: Sequence[float], b: Sequence[float]) -> tuple[float, float, float, float]:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


@dataclass(frozen=True)
class Rot3:
    """An element of SO(3) held as a canonical unit quaternion (w, x, y, z)."""

    q: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", _canonicalize(self.q))

    @classmethod
    def identity(cls) -> "Rot3":
        return cls((1.0, 0.0, 0.0, 0.0))

    @classmethod
    def from_matrix(cls, m) -> "Rot3":
        return cls(matrix_to_quat(np.asarray(m, dtype=float)))

    @classmethod
    def from_rpy(cls, roll: float, pitch: float, yaw: float) -> "Rot3":
        return compose(
            rot_about_axis(Axis.Z, yaw),
            compose(rot_about_axis(Axis.Y, pitch), rot_about_axis(Axis.X, roll)),
        )

    @cached_property
    def matrix(self) -> np.ndarray:
        m = quat_to_matrix(np.asarray(self.q))
        m.setflags(write=False)
        return m

    @cached_property
    def rpy(self) -> tuple[float, float, float]:
        r, p, y = rpy_from_matrices(self.matrix)
        return float(r), float(p), float(y)

    def inverse(self) -> "Rot3":
        w, x, y, z = self.q
        return Rot3((w, -x, -y, -z))

    def __matmul__(self, other: "Rot3") -> "Rot3":
        return compose(self, other)

    def as_array(self) -> np.ndarray:
        return np.array(self.q)


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValueError(f"Vec3 components must be finite: {(self.x, self.y, self.z)}")

    @classmethod
    def from_array(cls, a) -> "Vec3":
        x, y, z = (float(c) for c in a)
        return cls(x, y, z)

    @classmethod
    def zero(cls) -> "Vec3":
        return cls(0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __iter__(self) -> Iterator[float]:
        return iter((self.x, self.y, self.z))

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)


@dataclass(frozen=True)
class Pose:
    """Object configuration: position ``T`` (meters) and orientation ``R``."""

    T: Vec3
    R: Rot3


@dataclass(frozen=True)
class EulerZXZ:
    """Proper Euler angles with ``R = Rz(phi) Rx(theta) Rz(psi)``."""

    phi: float
    theta: float
    psi: float

    def to_rot3(self) -> Rot3:
        return compose(
            rot_about_axis(Axis.Z, self.phi),
            compose(rot_about_axis(Axis.X, self.theta), rot_about_axis(Axis.Z, self.psi)),
        )


@dataclass(frozen=True)
class StepSchedule:
    """Signed step offsets ordered by magnitude: 0, s, -s, 2s, -2s, ..., pi."""

    steps: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[float]:
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def as_array(self) -> np.ndarray:
        return np.array(self.steps)


AxisLike = Union[Axis, str]


def rot_about_axis(axis: AxisLike, angle: float) -> Rot3:
    """Rotation by ``angle`` radians about a hand-frame axis."""
    angle = float(angle)
    if not math.isfinite(angle):
        raise ValueError(f"angle must be finite, got {angle}")
    axis = Axis(axis)
    q = [math.cos(angle / 2.0), 0.0, 0.0, 0.0]
    q[1 + _AXIS_INDEX[axis]] = math.sin(angle / 2.0)
    return Rot3(tuple(q))


def compose(a: Rot3, b: Rot3) -> Rot3:
    """Group product ``a @ b`` (apply ``b`` first, then ``a``)."""
    return Rot3(_qmul(a.q, b.q))


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product of broadcastable (..., 4) quaternion arrays."""
    aw, ax, ay, az = np.moveaxis(np.asarray(a, dtype=float), -1, 0)
    bw, bx, by, bz = np.moveaxis(np.asarray(b, dtype=float), -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def canonical_quats(q: np.ndarray) -> np.ndarray:
    """Normalise (n, 4) quaternions and apply the Rot3 sign convention row-wise."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    nz = q != 0.0
    first = np.argmax(nz, axis=-1)
    lead = np.take_along_axis(q, first[..., None], axis=-1)
    return np.where(lead < 0.0, -q, q)


def axis_quats(axis: AxisLike, angles) -> np.ndarray:
    """Quaternions (n, 4) of rotations about one hand-frame axis."""
    angles = np.asarray(angles, dtype=float)
    q = np.zeros(angles.shape + (4,))
    q[..., 0] = np.cos(angles / 2.0)
    q[..., 1 + _AXIS_INDEX[Axis(axis)]] = np.sin(angles / 2.0)
    return q


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrices for quaternions of shape (..., 4), scalar first."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - w * z)
    m[..., 0, 2] = 2 * (x * z + w * y)
    m[..., 1, 0] = 2 * (x * y + w * z)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - w * x)
    m[..., 2, 0] = 2 * (x * z - w * y)
    m[..., 2, 1] = 2 * (y * z + w * x)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def matrix_to_quat(m: np.ndarray) -> np.ndarray:
    """Quaternion (w, x, y, z) of a single 3x3 rotation matrix."""
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    # Pivot on the largest diagonal term for numerical stability.
    if tr > 0:
        s = 2.0 * math.sqrt(tr + 1.0)
        q = (0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        q = ((m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s)
    elif m[1, 1] > m[2, 2]:
        s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
        q = ((m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s)
    else:
        s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
        q = ((m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s)
    return np.array(q)


def rpy_from_matrices(m: np.ndarray) -> np.ndarray:
    """Extrinsic X-Y-Z angles (roll, pitch, yaw) for matrices of shape (..., 3, 3).

    Returns an array of shape (3, ...).  Pitch lies in [-pi/2, pi/2].  At
    gimbal lock (pitch = +-pi/2) only roll -/+ yaw is defined; roll is then
    set to 0 and the whole rotation about z goes into yaw.
    """
    cos_pitch = np.hypot(m[..., 0, 0], m[..., 1, 0])
    locked = cos_pitch < _GIMBAL_EPS
    pitch = np.arctan2(-m[..., 2, 0], cos_pitch)
    roll = np.where(locked, 0.0, np.arctan2(m[..., 2, 1], m[..., 2, 2]))
    yaw = np.where(
        locked,
        np.arctan2(-m[..., 0, 1], m[..., 1, 1]),
        np.arctan2(m[..., 1, 0], m[..., 0, 0]),
    )
    return np.stack([roll, pitch, yaw])


def wrap_angle(a):
    """Wrap angles to the half-open interval (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(a, dtype=float), TWO_PI)


def _abs_wrapped(d: np.ndarray) -> np.ndarray:
    # |wrap(d)|, written so that d and -d give bit-identical results.
    a = np.mod(np.abs(d), TWO_PI)
    return np.minimum(a, TWO_PI - a)


def rpy_distance(rpy_a: np.ndarray, rpy_b: np.ndarray) -> np.ndarray:
    """Wrapped L2 RPY distance between broadcastable (3, ...) angle arrays."""
    d0 = _abs_wrapped(rpy_a[0] - rpy_b[0])
    d1 = _abs_wrapped(rpy_a[1] - rpy_b[1])
    d2 = _abs_wrapped(rpy_a[2] - rpy_b[2])
    return np.sqrt(d0 * d0 + d1 * d1 + d2 * d2)


def dist_R(a: Rot3, b: Rot3) -> float:
    """Rotational distance: L2 norm of wrapped roll, pitch and yaw differences."""
    return float(rpy_distance(np.array(a.rpy), np.array(b.rpy)))


def dist_T(a: Vec3, b: Vec3) -> float:
    """Euclidean distance between two positions."""
    return math.dist(tuple(a), tuple(b))


def geodesic_angle(a: Rot3, b: Rot3) -> float:
    """Angle of the relative rotation ``a^-1 b``, in [0, pi]."""
    aw, ax, ay, az = a.q
    w, x, y, z = _qmul((aw, -ax, -ay, -az), b.q)
    return 2.0 * math.atan2(math.sqrt(x * x + y * y + z * z), abs(w))


def euler_zxz_decompose(r_rel: Rot3) -> EulerZXZ:
    """Proper Euler angles (phi, theta, psi) with ``r_rel = Rz(phi) Rx(theta) Rz(psi)``.

    Works from the quaternion so that the sum and difference of the two
    z-angles are each recovered with ``atan2`` and stay well conditioned near
    theta = 0 and theta = pi.  At those singularities psi is fixed to 0 and the
    free rotation goes into phi.
    """
    w, x, y, z = r_rel.q
    s = math.hypot(x, y)  # sin(theta / 2)
    c = math.hypot(w, z)  # cos(theta / 2)
    theta = 2.0 * math.atan2(s, c)
    if s < _GIMBAL_EPS:
        theta, phi, psi = 0.0, 2.0 * math.atan2(z, w), 0.0
    elif c < _GIMBAL_EPS:
        theta, phi, psi = math.pi, 2.0 * math.atan2(y, x), 0.0
    else:
        total = 2.0 * math.atan2(z, w)  # phi + psi
        diff = 2.0 * math.atan2(y, x)  # phi - psi
        phi = 0.5 * (total + diff)
        psi = 0.5 * (total - diff)
    return EulerZXZ(phi=_to_unit_circle(phi), theta=theta, psi=_to_unit_circle(psi))


def _to_unit_circle(a: float) -> float:
    a = math.fmod(a, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    # fmod can return TWO_PI after the shift for tiny negative inputs.
    return 0.0 if a >= TWO_PI else a


def candidate_steps(sigma: float) -> StepSchedule:
    """Outward step schedule [0, s, -s, 2s, -2s, ..., pi] for step size ``sigma``.

    +pi and -pi are the same rotation and appear once, as +pi.  When pi is not
    a multiple of ``sigma`` the schedule still ends with pi instead of
    overshooting it.
    """
    sigma = float(sigma)
    if not (math.isfinite(sigma) and 0.0 < sigma <= math.pi + _SCHEDULE_EPS):
        raise ValueError(f"sigma must lie in (0, pi], got {sigma}")
    steps = [0.0]
    k = 1
    while k * sigma < math.pi - _SCHEDULE_EPS:
        steps.append(k * sigma)
        steps.append(-k * sigma)
        k += 1
    steps.append(math.pi)
    return StepSchedule(tuple(steps))
