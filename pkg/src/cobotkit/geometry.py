"""Rigid-body geometry: unit quaternions, 6D poses and twists.

Quaternions use the (w, x, y, z) Hamilton convention and are canonicalized
to w >= 0 on normalization so orientation errors are computed on a stable
double-cover representative. Translations are in meters, angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

QUAT_NORM_TOL = 1e-9


def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Return the unit quaternion for q, canonicalized to w >= 0."""
    q = np.asarray(q, dtype=float)
    n = math.sqrt(float(q @ q))
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    q = q / n
    if q[0] < 0.0:
        q = -q
    return q


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by unit quaternion q (active rotation)."""
    w = q[0]
    u = np.asarray(q[1:], dtype=float)
    t = 2.0 * np.cross(u, v)
    return np.asarray(v, dtype=float) + w * t + np.cross(u, t)


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = math.sqrt(float(axis @ axis))
    if n == 0.0:
        raise ValueError("zero rotation axis")
    half = 0.5 * angle
    s = math.sin(half) / n
    return np.array([math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle) of q, with angle in [0, pi]."""
    q = quat_normalize(q)
    v = q[1:]
    s = math.sqrt(float(v @ v))
    if s < 1e-15:
        return np.zeros(3)
    angle = 2.0 * math.atan2(s, q[0])
    return v * (angle / s)


def quat_from_rotvec(rv: np.ndarray) -> np.ndarray:
    rv = np.asarray(rv, dtype=float)
    angle = math.sqrt(float(rv @ rv))
    if angle < 1e-15:
        return np.array([1.0, 0.0, 0.0, 0.0])
    return quat_from_axis_angle(rv, angle)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Unit quaternion of a rotation matrix (Shepperd's method)."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_normalize(q)


@dataclass(frozen=True)
class Pose6D:
    """Rigid transform: unit quaternion (w,x,y,z) plus translation in meters."""

    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        q = quat_normalize(np.asarray(self.rotation, dtype=float))
        t = np.asarray(self.translation, dtype=float).reshape(3).copy()
        if not np.all(np.isfinite(t)):
            raise ValueError("non-finite translation")
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)
        self.rotation.setflags(write=False)
        self.translation.setflags(write=False)

    @staticmethod
    def identity() -> "Pose6D":
        return Pose6D()

    @staticmethod
    def from_parts(xyz, quat_wxyz) -> "Pose6D":
        return Pose6D(rotation=np.asarray(quat_wxyz, dtype=float), translation=np.asarray(xyz, dtype=float))

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Pose6D":
        m = np.asarray(m, dtype=float)
        return Pose6D(rotation=quat_from_matrix(m[:3, :3]), translation=m[:3, 3])

    def to_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.rotation)
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "Pose6D") -> "Pose6D":
        """Apply `other` in this pose's frame (self then other)."""
        return Pose6D(
            rotation=quat_multiply(self.rotation, other.rotation),
            translation=self.translation + quat_rotate(self.rotation, other.translation),
        )

    def inverse(self) -> "Pose6D":
        qi = quat_conjugate(self.rotation)
        return Pose6D(rotation=qi, translation=-quat_rotate(qi, self.translation))

    def apply(self, point: np.ndarray) -> np.ndarray:
        """Map a point from this pose's frame into the parent frame."""
        return self.translation + quat_rotate(self.rotation, np.asarray(point, dtype=float))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def to_wire(self) -> dict:
        return {"xyz": [float(v) for v in self.translation], "quat_wxyz": [float(v) for v in self.rotation]}

    @staticmethod
    def from_wire(d: dict) -> "Pose6D":
        return Pose6D.from_parts(d["xyz"], d["quat_wxyz"])

    def __repr__(self):
        t = ", ".join(f"{v:.6g}" for v in self.translation)
        q = ", ".join(f"{v:.6g}" for v in self.rotation)
        return f"Pose6D(t=[{t}], q=[{q}])"


def compose(a: Pose6D, b: Pose6D) -> Pose6D:
    return a.compose(b)


def rotation_angle_between(a: Pose6D, b: Pose6D) -> float:
    """Absolute rotation angle (rad) between two poses' orientations."""
    rel = quat_multiply(a.rotation, quat_conjugate(b.rotation))
    rv = quat_to_rotvec(rel)
    return float(np.linalg.norm(rv))


@dataclass(frozen=True)
class Twist:
    """Spatial velocity: linear in m/s, angular in rad/s."""

    linear: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float).reshape(3).copy()
        ang = np.asarray(self.angular, dtype=float).reshape(3).copy()
        if not (np.all(np.isfinite(lin)) and np.all(np.isfinite(ang))):
            raise ValueError("non-finite twist components")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "angular", ang)
        self.linear.setflags(write=False)
        self.angular.setflags(write=False)

    @staticmethod
    def zero() -> "Twist":
        return Twist()

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])

    @staticmethod
    def from_vector(v: np.ndarray) -> "Twist":
        v = np.asarray(v, dtype=float).reshape(6)
        return Twist(linear=v[:3], angular=v[3:])
