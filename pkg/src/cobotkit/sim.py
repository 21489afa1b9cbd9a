"""Deterministic kinematic world: joint integration under limits, box
objects, rigid grasp attachment, and spring-law contact synthesis for the
haptics path.

There are no dynamics: joint velocity commands integrate with Euler steps,
velocities and positions clamp to the model limits, and an attached object
rigidly follows the ee. Contacts are synthesized when the ee point
penetrates a box: force = k * depth along the outward normal of the
shallowest face.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import GraspError, ObjectNotFound
from .geometry import Pose6D, quat_rotate
from .kinematics import camera_pose, ee_pose
from .robot import JointState, RobotModel
from .scene import Detection

DEFAULT_DT = 0.004  # 250 Hz control/sim rate
GRASP_TOLERANCE = 0.010  # meters
CONTACT_STIFFNESS = 500.0  # N/m


@dataclass
class SimObject:
    object_id: str
    class_id: str
    pose_world: Pose6D
    half_extents: np.ndarray
    attached: bool = False
    attach_offset: Pose6D | None = None  # ee -> object while attached
    hidden_intervals: tuple = ()  # ((t0, t1), ...) when the detector cannot see it

    def __post_init__(self):
        self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(3)
        if np.any(self.half_extents <= 0):
            raise ValueError(f"object {self.object_id!r}: half extents must be positive")

    def visible_at(self, t: float) -> bool:
        return not any(t0 <= t <= t1 for t0, t1 in self.hidden_intervals)


@dataclass
class GripperState:
    width: float = 0.08
    attached_object: str | None = None


@dataclass
class ContactEvent:
    force: np.ndarray  # Newtons, world frame
    point: np.ndarray
    object_id: str


class SimWorld:
    def __init__(self, model: RobotModel, q0=None, objects=None, dt: float = DEFAULT_DT):
        self.model = model
        q = model.clamp(q0 if q0 is not None else model.mid_range())
        self.joints = JointState(positions=q, velocities=np.zeros(model.n))
        self.objects: dict[str, SimObject] = {o.object_id: o for o in (objects or [])}
        self.gripper = GripperState()
        self.time = 0.0
        self.dt = dt
        self.contact_stiffness = CONTACT_STIFFNESS
        self.grasp_tolerance = GRASP_TOLERANCE

    # -- kinematic queries -------------------------------------------------

    def ee_pose(self) -> Pose6D:
        return ee_pose(self.model, self.joints.positions)

    def camera_pose(self) -> Pose6D:
        return camera_pose(self.model, self.joints.positions)

    # -- stepping ----------------------------------------------------------

    def step(self, dq_cmd: np.ndarray, dt: float | None = None) -> None:
        """Integrate one tick; attached objects follow the ee rigidly."""
        dt = self.dt if dt is None else dt
        if dt <= 0:
            raise ValueError("dt must be positive")
        dq_cmd = np.asarray(dq_cmd, dtype=float).reshape(self.model.n)
        p = self.model.packed
        q_prev = self.joints.positions
        q_new = kernels.integrate_joints(q_prev, dq_cmd, dt, p["lo"], p["hi"], p["vel"])
        self.joints = JointState(
            positions=q_new,
            velocities=(q_new - q_prev) / dt,
            timestamp=self.joints.timestamp + dt,
        )
        self.time += dt
        if self.gripper.attached_object is not None:
            obj = self.objects[self.gripper.attached_object]
            obj.pose_world = self.ee_pose().compose(obj.attach_offset)

    # -- grasp attachment ---------------------------------------------------

    def _surface_distance(self, obj: SimObject, point_world: np.ndarray) -> float:
        """Distance from a point to the box surface; 0 inside."""
        local = obj.pose_world.inverse().apply(point_world)
        excess = np.abs(local) - obj.half_extents
        outside = np.maximum(excess, 0.0)
        return float(np.linalg.norm(outside))

    def attach(self, object_id: str) -> None:
        obj = self.objects.get(object_id)
        if obj is None:
            raise ObjectNotFound(f"no object {object_id!r} in world")
        ee = self.ee_pose()
        sep = self._surface_distance(obj, ee.translation)
        if sep > self.grasp_tolerance:
            raise GraspError(
                f"gripper closed {sep * 1000:.1f} mm from {object_id!r} "
                f"(tolerance {self.grasp_tolerance * 1000:.1f} mm)"
            )
        obj.attached = True
        obj.attach_offset = ee.inverse().compose(obj.pose_world)
        self.gripper.attached_object = object_id

    def detach(self, object_id: str | None = None) -> None:
        oid = object_id or self.gripper.attached_object
        if oid is None or oid not in self.objects or not self.objects[oid].attached:
            raise ObjectNotFound(f"object {oid!r} is not attached")
        obj = self.objects[oid]
        obj.attached = False
        obj.attach_offset = None
        self.gripper.attached_object = None

    # -- contact synthesis ---------------------------------------------------

    def synth_contacts(self) -> list:
        """Spring-law contact events for every box the ee point penetrates."""
        ee_t = self.ee_pose().translation
        events = []
        for obj in self.objects.values():
            local = obj.pose_world.inverse().apply(ee_t)
            depths = obj.half_extents - np.abs(local)
            if np.all(depths > 0.0):
                face = int(np.argmin(depths))
                depth = float(depths[face])
                normal_local = np.zeros(3)
                normal_local[face] = math.copysign(1.0, local[face]) if local[face] != 0.0 else 1.0
                normal_world = quat_rotate(obj.pose_world.rotation, normal_local)
                events.append(
                    ContactEvent(
                        force=self.contact_stiffness * depth * normal_world,
                        point=ee_t.copy(),
                        object_id=obj.object_id,
                    )
                )
        return events

    # -- detection synthesis --------------------------------------------------

    def detect(self, now: float | None = None) -> list:
        """Camera-frame detections of currently visible objects."""
        now = self.time if now is None else now
        cam_inv = self.camera_pose().inverse()
        out = []
        for obj in self.objects.values():
            if obj.visible_at(now):
                out.append(
                    Detection(
                        object_id=obj.object_id,
                        class_id=obj.class_id,
                        pose_camera=cam_inv.compose(obj.pose_world),
                        timestamp=now,
                    )
                )
        return out


def load_world_objects(doc: dict) -> list:
    """World scene document: {"objects": [{"id", "class", "half_extents",
    "pose": {...}, "hidden": [[t0,t1], ...]}]}."""
    objects = []
    for entry in doc.get("objects", []):
        objects.append(
            SimObject(
                object_id=entry["id"],
                class_id=entry.get("class", ""),
                pose_world=Pose6D.from_wire(entry["pose"]),
                half_extents=np.asarray(entry["half_extents"], dtype=float),
                hidden_intervals=tuple(tuple(map(float, iv)) for iv in entry.get("hidden", [])),
            )
        )
    return objects


def load_world_file(path) -> list:
    with open(path) as fh:
        return load_world_objects(json.load(fh))
