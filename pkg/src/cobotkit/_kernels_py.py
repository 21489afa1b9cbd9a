"""Pure-numpy kernels for the serial-chain hot path.

Mirrors the compiled extension in `_speedups.pyx`; the active implementation
is selected in `_backend`. Model data arrives packed as flat arrays (see
`robot.RobotModel.packed`): joint types (0 revolute, 1 prismatic), unit axes
in the local joint frame, parent->joint origin poses, and the fixed
last-joint->ee offset.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"


def _qmul(a, b):
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


def _qrot(q, v):
    w = q[0]
    u = q[1:]
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def _qnorm(q):
    q = q / math.sqrt(float(q @ q))
    return q


def fk_frames(types, axes, oq, ot, q):
    """World pose of every link frame (post joint motion).

    Returns (frames_q: (n,4), frames_t: (n,3)).
    """
    n = len(q)
    frames_q = np.empty((n, 4))
    frames_t = np.empty((n, 3))
    acc_q = np.array([1.0, 0.0, 0.0, 0.0])
    acc_t = np.zeros(3)
    for i in range(n):
        acc_t = acc_t + _qrot(acc_q, ot[i])
        acc_q = _qnorm(_qmul(acc_q, oq[i]))
        if types[i] == 0:
            half = 0.5 * q[i]
            s = math.sin(half)
            motion = np.array([math.cos(half), axes[i, 0] * s, axes[i, 1] * s, axes[i, 2] * s])
            acc_q = _qnorm(_qmul(acc_q, motion))
        else:
            acc_t = acc_t + _qrot(acc_q, axes[i] * q[i])
        frames_q[i] = acc_q
        frames_t[i] = acc_t
    return frames_q, frames_t


def fk_ee(types, axes, oq, ot, eq, et, q):
    """World pose of the end-effector frame: (quat (4,), trans (3,))."""
    frames_q, frames_t = fk_frames(types, axes, oq, ot, q)
    if len(q) == 0:
        last_q, last_t = np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3)
    else:
        last_q, last_t = frames_q[-1], frames_t[-1]
    ee_t = last_t + _qrot(last_q, et)
    ee_q = _qnorm(_qmul(last_q, eq))
    return ee_q, ee_t


def fk_jacobian(types, axes, oq, ot, eq, et, q):
    """FK plus the 6xn geometric Jacobian (world frame, about the ee point).

    Rows 0:3 are linear, 3:6 angular. Returns (ee_q, ee_t, J).
    """
    n = len(q)
    frames_q, frames_t = fk_frames(types, axes, oq, ot, q)
    if n == 0:
        ee_t = _qrot(np.array([1.0, 0.0, 0.0, 0.0]), et)
        return eq.copy(), ee_t, np.zeros((6, 0))
    ee_t = frames_t[-1] + _qrot(frames_q[-1], et)
    ee_q = _qnorm(_qmul(frames_q[-1], eq))
    J = np.zeros((6, n))
    for i in range(n):
        z = _qrot(frames_q[i], axes[i])
        if types[i] == 0:
            J[:3, i] = np.cross(z, ee_t - frames_t[i])
            J[3:, i] = z
        else:
            J[:3, i] = z
    return ee_q, ee_t, J


def pose_error6(qc, tc, q, t):
    """Task-space error: [t_c - t, rotvec(R_c R^-1)] with angle in [0, pi]."""
    e = np.empty(6)
    e[:3] = tc - t
    rel = _qmul(qc, np.array([q[0], -q[1], -q[2], -q[3]]))
    rel = _qnorm(rel)
    if rel[0] < 0.0:
        rel = -rel
    v = rel[1:]
    s = math.sqrt(float(v @ v))
    if s < 1e-15:
        e[3:] = 0.0
    else:
        angle = 2.0 * math.atan2(s, rel[0])
        e[3:] = v * (angle / s)
    return e


def integrate_joints(q, dq, dt, lo, hi, vel):
    """Euler step with per-joint velocity and position clamps."""
    dq_c = np.clip(dq, -vel, vel)
    return np.clip(q + dq_c * dt, lo, hi)
