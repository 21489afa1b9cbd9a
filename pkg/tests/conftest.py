"""Shared fixtures and independent oracles.

The oracles deliberately avoid the library's quaternion chain: forward
kinematics is re-derived with 4x4 homogeneous matrices and Rodrigues
rotations, and Jacobians with central finite differences, so the paths
being checked and the paths doing the checking share no code.
"""

import math

import numpy as np
import pytest

from cobotkit.geometry import quat_to_matrix
from cobotkit.robot import REVOLUTE, default_seven_dof, planar_two_link


@pytest.fixture(scope="session")
def seven_dof():
    return default_seven_dof()


@pytest.fixture(scope="session")
def planar():
    return planar_two_link()


def _skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])


def rodrigues(axis, angle):
    k = _skew(np.asarray(axis, dtype=float))
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def _homog(rot, trans):
    m = np.eye(4)
    m[:3, :3] = rot
    m[:3, 3] = trans
    return m


def fk_matrix_oracle(model, q):
    """End-effector pose as a 4x4 matrix via per-joint matrix chaining."""
    t = np.eye(4)
    for joint, qi in zip(model.joints, q):
        t = t @ _homog(quat_to_matrix(joint.origin.rotation), joint.origin.translation)
        if joint.type == REVOLUTE:
            t = t @ _homog(rodrigues(joint.axis, qi), np.zeros(3))
        else:
            t = t @ _homog(np.eye(3), joint.axis * qi)
    return t @ _homog(quat_to_matrix(model.ee_frame.rotation), model.ee_frame.translation)


def fd_jacobian_oracle(model, q, h=1e-6):
    """Central finite differences of the matrix-chain FK."""
    q = np.asarray(q, dtype=float)
    n = len(q)
    jac = np.zeros((6, n))
    base = fk_matrix_oracle(model, q)
    r0 = base[:3, :3]
    for i in range(n):
        qp = q.copy()
        qm = q.copy()
        qp[i] += h
        qm[i] -= h
        tp = fk_matrix_oracle(model, qp)
        tm = fk_matrix_oracle(model, qm)
        jac[:3, i] = (tp[:3, 3] - tm[:3, 3]) / (2 * h)
        dr = (tp[:3, :3] - tm[:3, :3]) / (2 * h)
        w = dr @ r0.T
        jac[3:, i] = [(w[2, 1] - w[1, 2]) / 2, (w[0, 2] - w[2, 0]) / 2, (w[1, 0] - w[0, 1]) / 2]
    return jac


def random_pose(rng):
    """Uniform-ish random rigid transform for round-trip tests."""
    from cobotkit.geometry import Pose6D

    v = rng.normal(size=4)
    return Pose6D(rotation=v / np.linalg.norm(v), translation=rng.uniform(-1, 1, 3))
