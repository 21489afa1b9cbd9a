"""Forward/differential kinematics: FK, geometric Jacobian, damped
pseudo-inverse, nullspace-projected velocity IK, and 3-point frame
registration.

The joint-velocity law is

    dq = J^+ xdot + (I - J^+ J) (q_sec - q)

with J^+ the (optionally damped) pseudo-inverse. Near singularities
(sigma_min < SINGULARITY_THRESHOLD) damping is auto-enabled to keep dq
bounded; callers see that through DiffIkResult.degraded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import DimensionError, RegistrationError
from .geometry import Pose6D, Twist
from .robot import RobotModel

SINGULARITY_THRESHOLD = 0.05
AUTO_DAMPING = 0.05


def _check_q(model: RobotModel, q, name: str = "q") -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape[0] != model.n:
        raise DimensionError(f"{name} has length {q.shape[0]}, model has {model.n} joints")
    return q


def forward_kinematics(model: RobotModel, q) -> dict:
    """World pose of every frame: each joint's child link, 'ee' and 'camera'.

    Returns an ordered dict name -> Pose6D.
    """
    q = _check_q(model, q)
    p = model.packed
    frames_q, frames_t = kernels.fk_frames(p["types"], p["axes"], p["oq"], p["ot"], q)
    out = {}
    for i, joint in enumerate(model.joints):
        out[joint.name] = Pose6D(rotation=frames_q[i], translation=frames_t[i])
    ee = out[model.joints[-1].name].compose(model.ee_frame)
    out["ee"] = ee
    out["camera"] = ee.compose(model.camera_frame)
    return out


def ee_pose(model: RobotModel, q) -> Pose6D:
    q = _check_q(model, q)
    p = model.packed
    ee_q, ee_t = kernels.fk_ee(p["types"], p["axes"], p["oq"], p["ot"], p["eq"], p["et"], q)
    return Pose6D(rotation=ee_q, translation=ee_t)


def camera_pose(model: RobotModel, q) -> Pose6D:
    return ee_pose(model, q).compose(model.camera_frame)


def jacobian(model: RobotModel, q) -> np.ndarray:
    """6xn geometric Jacobian, world frame about the ee point (linear rows first)."""
    q = _check_q(model, q)
    p = model.packed
    _, _, J = kernels.fk_jacobian(p["types"], p["axes"], p["oq"], p["ot"], p["eq"], p["et"], q)
    return J


def fk_and_jacobian(model: RobotModel, q):
    """Single-pass (ee_pose, J); the closed-loop hot path."""
    q = _check_q(model, q)
    p = model.packed
    ee_q, ee_t, J = kernels.fk_jacobian(p["types"], p["axes"], p["oq"], p["ot"], p["eq"], p["et"], q)
    return Pose6D(rotation=ee_q, translation=ee_t), J


def pseudo_inverse(J: np.ndarray, damping: float = 0.0) -> np.ndarray:
    """Moore-Penrose inverse for damping=0, else J^T (J J^T + damping^2 I)^-1.

    Both branches go through the SVD so the damped form is exact for any
    shape and rank.
    """
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise ValueError("Jacobian contains non-finite entries")
    if damping < 0:
        raise ValueError("damping must be >= 0")
    if damping == 0.0:
        return np.linalg.pinv(J)
    U, S, Vt = np.linalg.svd(J, full_matrices=False)
    inv_s = S / (S * S + damping * damping)
    return (Vt.T * inv_s) @ U.T


@dataclass(frozen=True)
class DiffIkResult:
    dq: np.ndarray
    sigma_min: float
    damping: float
    degraded: bool

    def __iter__(self):  # allows `dq, info = diff_ik(...)` style unpacking
        yield self.dq
        yield self


def diff_ik(
    model: RobotModel,
    q,
    twist_cmd: Twist,
    q_sec=None,
    damping: float = 0.0,
    clamp: bool = True,
) -> DiffIkResult:
    """Joint velocities realizing a task-space twist with nullspace bias.

    The secondary target defaults to the model's mid-range configuration.
    When the commanded damping is zero and the arm is near-singular
    (sigma_min < 0.05) damping 0.05 is enabled automatically and the result
    is flagged degraded. If clamping is requested the whole vector is scaled
    uniformly so no joint exceeds its velocity limit (direction preserved).
    """
    q = _check_q(model, q)
    q_sec = model.mid_range() if q_sec is None else _check_q(model, q_sec, "q_sec")
    J = jacobian(model, q)
    xdot = twist_cmd.as_vector()

    U, S, Vt = np.linalg.svd(J, full_matrices=False)
    sigma_min = float(S[-1]) if S.size else 0.0
    degraded = damping == 0.0 and sigma_min < SINGULARITY_THRESHOLD
    lam = damping if damping > 0.0 else (AUTO_DAMPING if degraded else 0.0)

    if lam > 0.0:
        inv_s = S / (S * S + lam * lam)
    else:
        cutoff = max(J.shape) * np.finfo(float).eps * (S[0] if S.size else 0.0)
        inv_s = np.where(S > cutoff, 1.0 / np.where(S > cutoff, S, 1.0), 0.0)
    J_pinv = (Vt.T * inv_s) @ U.T

    dq = J_pinv @ xdot + (np.eye(model.n) - J_pinv @ J) @ (q_sec - q)

    if clamp:
        vel = model.velocity_limits
        over = np.abs(dq) / vel
        worst = float(over.max()) if over.size else 0.0
        if worst > 1.0:
            dq = dq / worst

    return DiffIkResult(dq=dq, sigma_min=sigma_min, damping=lam, degraded=degraded)


@dataclass(frozen=True)
class Registration:
    pose: Pose6D
    scale: float


def register_three_point(p0, p1, p2, reference_length: float | None = None) -> Registration:
    """Frame from three annotated points: origin p0, x toward p1, z = x cross (p2-p0).

    The optional reference length converts |p1-p0| into a scale factor for
    calibrating a remote/HMD frame; without it scale is 1.
    """
    p0 = np.asarray(p0, dtype=float).reshape(3)
    p1 = np.asarray(p1, dtype=float).reshape(3)
    p2 = np.asarray(p2, dtype=float).reshape(3)
    v1 = p1 - p0
    v2 = p2 - p0
    area = 0.5 * float(np.linalg.norm(np.cross(v1, v2)))
    if area <= 1e-9:
        raise RegistrationError(f"points are collinear (triangle area {area:.3g} m^2)")
    x = v1 / np.linalg.norm(v1)
    z = np.cross(x, v2)
    z = z / np.linalg.norm(z)
    y = np.cross(z, x)
    rot = np.column_stack([x, y, z])
    pose = Pose6D.from_matrix(np.block([[rot, p0.reshape(3, 1)], [np.zeros((1, 3)), np.ones((1, 1))]]))
    if reference_length is not None:
        if reference_length <= 0:
            raise RegistrationError("reference_length must be positive")
        scale = float(np.linalg.norm(v1)) / reference_length
    else:
        scale = 1.0
    return Registration(pose=pose, scale=scale)
