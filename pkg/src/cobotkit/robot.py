"""Serial-chain robot description, joint state, and the bundled arm models.

A RobotModel is an ordered list of revolute/prismatic joints with fixed
parent->joint origin poses, plus fixed ee and in-hand-camera offsets. The
JSON document format is::

    { "joints": [{"name", "type", "axis": [x,y,z],
                  "origin": {"xyz": [...], "quat_wxyz": [...]},
                  "limits": {"lo", "hi", "vel"}}],
      "ee_offset": {...}, "camera_offset": {...} }

Angles in radians, lengths in meters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from .geometry import Pose6D, quat_from_axis_angle

REVOLUTE = "revolute"
PRISMATIC = "prismatic"


@dataclass(frozen=True)
class Joint:
    name: str
    axis: np.ndarray
    origin: Pose6D
    type: str = REVOLUTE
    lo: float = -2.0 * math.pi
    hi: float = 2.0 * math.pi
    velocity_limit: float = 2.5

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = float(np.linalg.norm(axis))
        if abs(n - 1.0) > 1e-9:
            raise ModelError(f"joint {self.name!r}: axis must be unit-norm, got |axis|={n:.6g}")
        if self.type not in (REVOLUTE, PRISMATIC):
            raise ModelError(f"joint {self.name!r}: unknown type {self.type!r}")
        if not self.lo < self.hi:
            raise ModelError(f"joint {self.name!r}: limits must satisfy lo < hi")
        if self.velocity_limit <= 0:
            raise ModelError(f"joint {self.name!r}: velocity limit must be positive")
        object.__setattr__(self, "axis", axis)
        self.axis.setflags(write=False)


@dataclass(frozen=True)
class RobotModel:
    joints: tuple
    ee_frame: Pose6D = field(default_factory=Pose6D.identity)
    camera_frame: Pose6D = field(default_factory=Pose6D.identity)
    name: str = "arm"

    def __post_init__(self):
        joints = tuple(self.joints)
        if not joints:
            raise ModelError("robot model needs at least one joint")
        names = [j.name for j in joints]
        if len(set(names)) != len(names):
            raise ModelError("duplicate joint names")
        object.__setattr__(self, "joints", joints)
        # Packed views consumed by the kernel backend.
        packed = {
            "types": np.array([0 if j.type == REVOLUTE else 1 for j in joints], dtype=np.int8),
            "axes": np.array([j.axis for j in joints], dtype=float),
            "oq": np.array([j.origin.rotation for j in joints], dtype=float),
            "ot": np.array([j.origin.translation for j in joints], dtype=float),
            "eq": np.asarray(self.ee_frame.rotation, dtype=float),
            "et": np.asarray(self.ee_frame.translation, dtype=float),
            "lo": np.array([j.lo for j in joints], dtype=float),
            "hi": np.array([j.hi for j in joints], dtype=float),
            "vel": np.array([j.velocity_limit for j in joints], dtype=float),
        }
        for arr in packed.values():
            arr.setflags(write=False)
        object.__setattr__(self, "_packed", packed)

    @property
    def n(self) -> int:
        return len(self.joints)

    @property
    def packed(self) -> dict:
        return self._packed

    @property
    def position_limits(self):
        return self._packed["lo"], self._packed["hi"]

    @property
    def velocity_limits(self) -> np.ndarray:
        return self._packed["vel"]

    def mid_range(self) -> np.ndarray:
        """Mid-range joint vector, the default secondary target."""
        return 0.5 * (self._packed["lo"] + self._packed["hi"])

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(q, dtype=float), self._packed["lo"], self._packed["hi"])

    def to_json_dict(self) -> dict:
        return {
            "joints": [
                {
                    "name": j.name,
                    "type": j.type,
                    "axis": [float(v) for v in j.axis],
                    "origin": j.origin.to_wire(),
                    "limits": {"lo": j.lo, "hi": j.hi, "vel": j.velocity_limit},
                }
                for j in self.joints
            ],
            "ee_offset": self.ee_frame.to_wire(),
            "camera_offset": self.camera_frame.to_wire(),
        }

    @staticmethod
    def from_json_dict(doc: dict, name: str = "arm") -> "RobotModel":
        try:
            joints = [
                Joint(
                    name=j["name"],
                    type=j.get("type", REVOLUTE),
                    axis=np.asarray(j["axis"], dtype=float),
                    origin=Pose6D.from_wire(j["origin"]),
                    lo=float(j["limits"]["lo"]),
                    hi=float(j["limits"]["hi"]),
                    velocity_limit=float(j["limits"]["vel"]),
                )
                for j in doc["joints"]
            ]
            ee = Pose6D.from_wire(doc["ee_offset"]) if "ee_offset" in doc else Pose6D.identity()
            cam = Pose6D.from_wire(doc["camera_offset"]) if "camera_offset" in doc else Pose6D.identity()
        except (KeyError, TypeError, IndexError) as exc:
            raise ModelError(f"malformed robot model document: {exc}") from exc
        return RobotModel(joints=tuple(joints), ee_frame=ee, camera_frame=cam, name=name)

    @staticmethod
    def load(path) -> "RobotModel":
        with open(path) as fh:
            return RobotModel.from_json_dict(json.load(fh))


@dataclass
class JointState:
    positions: np.ndarray
    velocities: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).copy()
        self.velocities = np.asarray(self.velocities, dtype=float).copy()

    @staticmethod
    def zero(n: int) -> "JointState":
        return JointState(positions=np.zeros(n), velocities=np.zeros(n))

    def copy(self) -> "JointState":
        return JointState(self.positions.copy(), self.velocities.copy(), self.timestamp)


def _rx(angle: float) -> Pose6D:
    return Pose6D(rotation=quat_from_axis_angle([1.0, 0.0, 0.0], angle))


def default_seven_dof() -> RobotModel:
    """7-DOF redundant arm (Franka-style geometry) used as the reference sim model."""
    z = np.array([0.0, 0.0, 1.0])
    half = math.pi / 2.0
    joints = (
        Joint("joint1", z, Pose6D(translation=[0.0, 0.0, 0.333]), REVOLUTE, -2.8973, 2.8973, 2.175),
        Joint("joint2", z, _rx(-half), REVOLUTE, -1.7628, 1.7628, 2.175),
        Joint("joint3", z, Pose6D(rotation=quat_from_axis_angle([1, 0, 0], half), translation=[0.0, -0.316, 0.0]), REVOLUTE, -2.8973, 2.8973, 2.175),
        Joint("joint4", z, Pose6D(rotation=quat_from_axis_angle([1, 0, 0], half), translation=[0.0825, 0.0, 0.0]), REVOLUTE, -3.0718, -0.0698, 2.175),
        Joint("joint5", z, Pose6D(rotation=quat_from_axis_angle([1, 0, 0], -half), translation=[-0.0825, 0.384, 0.0]), REVOLUTE, -2.8973, 2.8973, 2.61),
        Joint("joint6", z, _rx(half), REVOLUTE, -0.0175, 3.7525, 2.61),
        Joint("joint7", z, Pose6D(rotation=quat_from_axis_angle([1, 0, 0], half), translation=[0.088, 0.0, 0.0]), REVOLUTE, -2.8973, 2.8973, 2.61),
    )
    return RobotModel(
        joints=joints,
        ee_frame=Pose6D(translation=[0.0, 0.0, 0.107]),
        camera_frame=Pose6D(translation=[0.05, 0.0, 0.04]),
        name="seven_dof",
    )


HOME_SEVEN_DOF = np.array([0.0, -0.3, 0.0, -1.8, 0.0, 1.5, 0.785])


def planar_two_link(l1: float = 1.0, l2: float = 1.0) -> RobotModel:
    """2R planar arm in the xy plane; handy analytic test case."""
    z = np.array([0.0, 0.0, 1.0])
    joints = (
        Joint("shoulder", z, Pose6D.identity(), REVOLUTE, -math.pi, math.pi, 2.5),
        Joint("elbow", z, Pose6D(translation=[l1, 0.0, 0.0]), REVOLUTE, -math.pi, math.pi, 2.5),
    )
    return RobotModel(joints=joints, ee_frame=Pose6D(translation=[l2, 0.0, 0.0]), name="planar2")


def single_prismatic(axis=(0.0, 0.0, 1.0)) -> RobotModel:
    joints = (Joint("slide", np.asarray(axis, dtype=float), Pose6D.identity(), PRISMATIC, -1.0, 1.0, 0.5),)
    return RobotModel(joints=joints, name="prismatic1")
