"""The five robot-action primitives: Move, Grasp, Place, LookAt, Perceive.

Each primitive is an object-centric state machine stepped once per engine
tick. A step emits the current waypoint as the controller target x_c (or a
gripper/perception request) and advances its phase once the ee is inside
the waypoint tolerance. Grasp and place waypoints are recomputed from scene
memory every tick, so they follow re-detections and, thanks to object
permanency, still target remembered objects that are out of view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .controllers import pose_error
from .errors import ObjectNotFound
from .geometry import Pose6D, quat_from_matrix, quat_rotate, quat_to_matrix
from .scene import SceneMemory
from .sim import GripperState

MOVE = "move"
GRASP = "grasp"
PLACE = "place"
LOOKAT = "lookat"
PERCEIVE = "perceive"
KINDS = (MOVE, GRASP, PLACE, LOOKAT, PERCEIVE)

RUNNING = "running"
SUCCEEDED = "succeeded"
FAILED = "failed"

DEFAULT_POSITION_TOL = 0.002  # 2 mm
DEFAULT_ORIENTATION_TOL = math.radians(1.0)
DEFAULT_PHASE_TIMEOUT = 30.0

PHASES = {
    MOVE: ("moving",),
    GRASP: ("approaching_pre_grasp", "approaching_grasp", "closing_gripper", "retreating_post_grasp"),
    PLACE: ("approaching_pre_place", "approaching_place", "opening_gripper", "retreating_post_place"),
    LOOKAT: ("orienting",),
    PERCEIVE: ("perceiving",),
}


# -- parameter records ----------------------------------------------------


def _pose_from(doc, key, default=None):
    if key in doc:
        return Pose6D.from_wire(doc[key])
    return default


@dataclass(frozen=True)
class MoveParams:
    target: Pose6D | None = None  # absolute world pose
    offset: Pose6D | None = None  # object-frame pose; requires an object ref
    speed_mode: str | None = None

    def __post_init__(self):
        if (self.target is None) == (self.offset is None):
            raise ValueError("move needs exactly one of target (world) or offset (object frame)")


@dataclass(frozen=True)
class GraspParams:
    pre_grasp: Pose6D
    grasp: Pose6D
    post_grasp: Pose6D
    object_class: str = ""
    approach_speed_mode: str = "slow"
    gripper_width: float = 0.0
    grip_pressure: float = 0.5

    def __post_init__(self):
        if self.gripper_width < 0:
            raise ValueError("gripper_width must be >= 0")
        if not 0.0 <= self.grip_pressure <= 1.0:
            raise ValueError("grip_pressure must be in [0,1]")


@dataclass(frozen=True)
class PlaceParams:
    target: Pose6D | None = None  # absolute world pose
    offset: Pose6D | None = None  # target-object-frame pose; requires object ref
    pre_place: Pose6D = field(default_factory=Pose6D.identity)
    post_place: Pose6D = field(default_factory=Pose6D.identity)

    def __post_init__(self):
        if (self.target is None) == (self.offset is None):
            raise ValueError("place needs exactly one of target (world) or offset (object frame)")


@dataclass(frozen=True)
class LookAtParams:
    point: np.ndarray | None = None  # world point; None -> object origin
    world_up: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        if self.point is not None:
            object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(3))
        up = np.asarray(self.world_up, dtype=float).reshape(3)
        object.__setattr__(self, "world_up", up / np.linalg.norm(up))


@dataclass(frozen=True)
class PerceiveParams:
    wait_for_object: bool = False  # require the referenced object to refresh


@dataclass(frozen=True)
class PrimitiveSpec:
    kind: str
    params: object
    id: str
    object_ref: str | None = None  # logical name in the task
    resolved_object: str | None = None  # concrete scene object id

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown primitive kind {self.kind!r}")

    def resolve(self, object_id: str) -> "PrimitiveSpec":
        return replace(self, resolved_object=object_id)


@dataclass(frozen=True)
class PrimitiveStatus:
    phase: str
    progress: float = 0.0
    outcome: str = RUNNING
    failure_reason: str | None = None
    phase_started: float = 0.0
    request_time: float | None = None  # perceive bookkeeping
    frozen_target: Pose6D | None = None  # retreat waypoint captured at attach/release

    @staticmethod
    def start(spec: PrimitiveSpec, now: float = 0.0) -> "PrimitiveStatus":
        return PrimitiveStatus(phase=PHASES[spec.kind][0], phase_started=now)

    def fail(self, reason: str) -> "PrimitiveStatus":
        return replace(self, outcome=FAILED, failure_reason=reason)

    def succeed(self) -> "PrimitiveStatus":
        return replace(self, outcome=SUCCEEDED, progress=1.0)


@dataclass(frozen=True)
class PrimitiveCommand:
    """What a primitive asks of the engine for this tick."""

    target: Pose6D | None = None
    force_slow: bool = False
    gripper: str | None = None  # "close" | "open"
    gripper_width: float = 0.0
    grip_pressure: float = 0.0
    request_perception: bool = False

    @staticmethod
    def idle() -> "PrimitiveCommand":
        return PrimitiveCommand()


@dataclass(frozen=True)
class PrimitiveConfig:
    position_tolerance: float = DEFAULT_POSITION_TOL
    orientation_tolerance: float = DEFAULT_ORIENTATION_TOL
    phase_timeout: float = DEFAULT_PHASE_TIMEOUT
    camera_offset: Pose6D = field(default_factory=Pose6D.identity)


# -- planning helpers ------------------------------------------------------


@dataclass(frozen=True)
class Waypoint:
    name: str
    pose: Pose6D | None = None
    gripper: str | None = None


def plan_grasp(params: GraspParams, object_pose_world: Pose6D) -> list:
    """Ordered grasp waypoints: pre -> grasp -> close -> post.

    Every pose is object_pose ∘ object-frame offset, so the whole plan is
    6D-invariant: transforming the object transforms each waypoint the same
    way.
    """
    return [
        Waypoint("pre_grasp", object_pose_world.compose(params.pre_grasp)),
        Waypoint("grasp", object_pose_world.compose(params.grasp)),
        Waypoint("close_gripper", None, gripper="close"),
        Waypoint("post_grasp", object_pose_world.compose(params.post_grasp)),
    ]


def look_at_orientation(camera_pose: Pose6D, target, world_up=(0.0, 0.0, 1.0)) -> Pose6D:
    """Desired camera pose: +z optical axis toward target, position unchanged.

    The camera x-axis is kept horizontal w.r.t. world_up (roll stabilized);
    when the bearing is parallel to world_up the current roll is kept
    instead.
    """
    target = np.asarray(target, dtype=float).reshape(3)
    up = np.asarray(world_up, dtype=float).reshape(3)
    up = up / np.linalg.norm(up)
    bearing = target - camera_pose.translation
    dist = float(np.linalg.norm(bearing))
    if dist < 1e-12:
        raise ValueError("look-at target coincides with the camera position")
    z = bearing / dist
    x = np.cross(z, up)
    xn = float(np.linalg.norm(x))
    if xn < 1e-9:
        # Bearing parallel to world_up: keep the current roll.
        x_prev = quat_rotate(camera_pose.rotation, np.array([1.0, 0.0, 0.0]))
        x = x_prev - (x_prev @ z) * z
        xn = float(np.linalg.norm(x))
        if xn < 1e-9:
            x = np.cross(np.array([0.0, 1.0, 0.0]), z)
            xn = float(np.linalg.norm(x))
    x = x / xn
    y = np.cross(z, x)
    rot = quat_from_matrix(np.column_stack([x, y, z]))
    return Pose6D(rotation=rot, translation=camera_pose.translation)


# -- stepping --------------------------------------------------------------


def _within_tolerance(target: Pose6D, ee_pose: Pose6D, cfg: PrimitiveConfig) -> bool:
    e = pose_error(target, ee_pose)
    return (
        float(np.linalg.norm(e[:3])) <= cfg.position_tolerance
        and float(np.linalg.norm(e[3:])) <= cfg.orientation_tolerance
    )


def _object_pose(spec: PrimitiveSpec, scene: SceneMemory, now: float) -> Pose6D:
    oid = spec.resolved_object
    if oid is None:
        raise ObjectNotFound(f"step {spec.id!r} has no resolved object")
    return scene.query_object(oid, now).pose_world  # remembered objects still resolve


def _advance(spec: PrimitiveSpec, status: PrimitiveStatus, now: float) -> PrimitiveStatus:
    phases = PHASES[spec.kind]
    idx = phases.index(status.phase)
    if idx + 1 >= len(phases):
        return status.succeed()
    return replace(
        status,
        phase=phases[idx + 1],
        phase_started=now,
        progress=(idx + 1) / len(phases),
    )


def step_primitive(
    spec: PrimitiveSpec,
    status: PrimitiveStatus,
    scene: SceneMemory,
    ee_pose: Pose6D,
    now: float,
    dt: float,
    gripper: GripperState | None = None,
    config: PrimitiveConfig | None = None,
):
    """Advance one tick; returns (new status, command for the engine)."""
    cfg = config or PrimitiveConfig()
    gripper = gripper or GripperState()
    if status.outcome != RUNNING:
        return status, PrimitiveCommand.idle()
    if now - status.phase_started > cfg.phase_timeout:
        return status.fail(f"timeout in phase {status.phase!r}"), PrimitiveCommand.idle()

    try:
        if spec.kind == MOVE:
            return _step_move(spec, status, scene, ee_pose, now, cfg)
        if spec.kind == GRASP:
            return _step_grasp(spec, status, scene, ee_pose, now, gripper, cfg)
        if spec.kind == PLACE:
            return _step_place(spec, status, scene, ee_pose, now, gripper, cfg)
        if spec.kind == LOOKAT:
            return _step_lookat(spec, status, scene, ee_pose, now, cfg)
        return _step_perceive(spec, status, scene, now)
    except ObjectNotFound:
        return status.fail("object_not_found"), PrimitiveCommand.idle()


def _step_move(spec, status, scene, ee_pose, now, cfg):
    p: MoveParams = spec.params
    if p.target is not None:
        target = p.target
    else:
        target = _object_pose(spec, scene, now).compose(p.offset)
    if _within_tolerance(target, ee_pose, cfg):
        return _advance(spec, status, now), PrimitiveCommand(target=target)
    return status, PrimitiveCommand(target=target, force_slow=p.speed_mode == "slow")


def _step_grasp(spec, status, scene, ee_pose, now, gripper, cfg):
    p: GraspParams = spec.params
    force_slow = p.approach_speed_mode == "slow"
    if status.phase == "approaching_pre_grasp":
        target = _object_pose(spec, scene, now).compose(p.pre_grasp)
        if _within_tolerance(target, ee_pose, cfg):
            status = _advance(spec, status, now)
        return status, PrimitiveCommand(target=target, force_slow=force_slow)
    if status.phase == "approaching_grasp":
        target = _object_pose(spec, scene, now).compose(p.grasp)
        if _within_tolerance(target, ee_pose, cfg):
            status = _advance(spec, status, now)
        return status, PrimitiveCommand(target=target, force_slow=force_slow)
    if status.phase == "closing_gripper":
        if gripper.attached_object == spec.resolved_object:
            # Freeze the retreat waypoint at the attach-time object pose; the
            # object follows the ee from here on.
            post = _object_pose(spec, scene, now).compose(p.post_grasp)
            status = replace(_advance(spec, status, now), frozen_target=post)
            return status, PrimitiveCommand(target=post, force_slow=force_slow)
        return status, PrimitiveCommand(
            target=ee_pose,
            force_slow=True,
            gripper="close",
            gripper_width=p.gripper_width,
            grip_pressure=p.grip_pressure,
        )
    # retreating_post_grasp
    target = status.frozen_target
    if _within_tolerance(target, ee_pose, cfg):
        return _advance(spec, status, now), PrimitiveCommand(target=target)
    return status, PrimitiveCommand(target=target, force_slow=force_slow)


def _place_target(spec, scene, now) -> Pose6D:
    p: PlaceParams = spec.params
    if p.target is not None:
        return p.target
    return _object_pose(spec, scene, now).compose(p.offset)


def _step_place(spec, status, scene, ee_pose, now, gripper, cfg):
    p: PlaceParams = spec.params
    if status.phase == "approaching_pre_place":
        target = _place_target(spec, scene, now).compose(p.pre_place)
        if _within_tolerance(target, ee_pose, cfg):
            status = _advance(spec, status, now)
        return status, PrimitiveCommand(target=target, force_slow=True)
    if status.phase == "approaching_place":
        target = _place_target(spec, scene, now)
        if _within_tolerance(target, ee_pose, cfg):
            status = _advance(spec, status, now)
        return status, PrimitiveCommand(target=target, force_slow=True)
    if status.phase == "opening_gripper":
        if gripper.attached_object is None:
            post = _place_target(spec, scene, now).compose(p.post_place)
            status = replace(_advance(spec, status, now), frozen_target=post)
            return status, PrimitiveCommand(target=post)
        return status, PrimitiveCommand(target=ee_pose, force_slow=True, gripper="open")
    target = status.frozen_target
    if _within_tolerance(target, ee_pose, cfg):
        return _advance(spec, status, now), PrimitiveCommand(target=target)
    return status, PrimitiveCommand(target=target)


def _step_lookat(spec, status, scene, ee_pose, now, cfg):
    p: LookAtParams = spec.params
    point = p.point if p.point is not None else _object_pose(spec, scene, now).translation
    cam = ee_pose.compose(cfg.camera_offset)
    desired_cam = look_at_orientation(cam, point, p.world_up)
    target = desired_cam.compose(cfg.camera_offset.inverse())
    # Success on optical-axis alignment rather than full pose error.
    axis = quat_to_matrix(cam.rotation)[:, 2]
    bearing = point - cam.translation
    bearing = bearing / np.linalg.norm(bearing)
    if float(axis @ bearing) >= math.cos(cfg.orientation_tolerance):
        return _advance(spec, status, now), PrimitiveCommand(target=target)
    return status, PrimitiveCommand(target=target)


def _step_perceive(spec, status, scene, now):
    p: PerceiveParams = spec.params
    if status.request_time is None:
        status = replace(status, request_time=now)
        return status, PrimitiveCommand(request_perception=True)
    fresh = False
    if p.wait_for_object and spec.resolved_object is not None:
        if spec.resolved_object in scene:
            fresh = scene.query_object(spec.resolved_object, now).last_seen >= status.request_time
    else:
        fresh = scene.last_update is not None and scene.last_update >= status.request_time
    if fresh:
        return _advance(spec, status, now), PrimitiveCommand.idle()
    return status, PrimitiveCommand(request_perception=True)


# -- JSON parameter schemas -------------------------------------------------

_POSE_SCHEMA = {
    "type": "object",
    "required": ["xyz", "quat_wxyz"],
    "properties": {
        "xyz": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
        "quat_wxyz": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
    },
    "additionalProperties": False,
}

_VEC3_SCHEMA = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}


def parameter_schemas() -> dict:
    """JSON schema per primitive kind; consumed by task validation and UIs."""
    return {
        MOVE: {
            "type": "object",
            "properties": {
                "target": _POSE_SCHEMA,
                "offset": _POSE_SCHEMA,
                "speed_mode": {"enum": ["slow", "fast"]},
            },
            "oneOf": [{"required": ["target"]}, {"required": ["offset"]}],
            "additionalProperties": False,
        },
        GRASP: {
            "type": "object",
            "required": ["pre_grasp", "grasp", "post_grasp"],
            "properties": {
                "object_class": {"type": "string"},
                "pre_grasp": _POSE_SCHEMA,
                "grasp": _POSE_SCHEMA,
                "post_grasp": _POSE_SCHEMA,
                "approach_speed_mode": {"enum": ["slow", "fast"]},
                "gripper_width": {"type": "number", "minimum": 0},
                "grip_pressure": {"type": "number", "minimum": 0, "maximum": 1},
            },
            "additionalProperties": False,
        },
        PLACE: {
            "type": "object",
            "properties": {
                "target": _POSE_SCHEMA,
                "offset": _POSE_SCHEMA,
                "pre_place": _POSE_SCHEMA,
                "post_place": _POSE_SCHEMA,
            },
            "oneOf": [{"required": ["target"]}, {"required": ["offset"]}],
            "additionalProperties": False,
        },
        LOOKAT: {
            "type": "object",
            "properties": {"point": _VEC3_SCHEMA, "world_up": _VEC3_SCHEMA},
            "additionalProperties": False,
        },
        PERCEIVE: {
            "type": "object",
            "properties": {"wait_for_object": {"type": "boolean"}},
            "additionalProperties": False,
        },
    }


def params_from_json(kind: str, doc: dict):
    """Decode a params record; raises ValueError with a field hint."""
    if kind == MOVE:
        return MoveParams(
            target=_pose_from(doc, "target"),
            offset=_pose_from(doc, "offset"),
            speed_mode=doc.get("speed_mode"),
        )
    if kind == GRASP:
        missing = [k for k in ("pre_grasp", "grasp", "post_grasp") if k not in doc]
        if missing:
            raise ValueError(f"grasp params missing required frame(s): {', '.join(missing)}")
        return GraspParams(
            pre_grasp=_pose_from(doc, "pre_grasp"),
            grasp=_pose_from(doc, "grasp"),
            post_grasp=_pose_from(doc, "post_grasp"),
            object_class=doc.get("object_class", ""),
            approach_speed_mode=doc.get("approach_speed_mode", "slow"),
            gripper_width=float(doc.get("gripper_width", 0.0)),
            grip_pressure=float(doc.get("grip_pressure", 0.5)),
        )
    if kind == PLACE:
        return PlaceParams(
            target=_pose_from(doc, "target"),
            offset=_pose_from(doc, "offset"),
            pre_place=_pose_from(doc, "pre_place", Pose6D.identity()),
            post_place=_pose_from(doc, "post_place", Pose6D.identity()),
        )
    if kind == LOOKAT:
        return LookAtParams(point=doc.get("point"), world_up=doc.get("world_up", (0.0, 0.0, 1.0)))
    if kind == PERCEIVE:
        return PerceiveParams(wait_for_object=bool(doc.get("wait_for_object", False)))
    raise ValueError(f"unknown primitive kind {kind!r}")


def params_to_json(kind: str, params) -> dict:
    if kind == MOVE:
        out = {}
        if params.target is not None:
            out["target"] = params.target.to_wire()
        if params.offset is not None:
            out["offset"] = params.offset.to_wire()
        if params.speed_mode:
            out["speed_mode"] = params.speed_mode
        return out
    if kind == GRASP:
        return {
            "object_class": params.object_class,
            "pre_grasp": params.pre_grasp.to_wire(),
            "grasp": params.grasp.to_wire(),
            "post_grasp": params.post_grasp.to_wire(),
            "approach_speed_mode": params.approach_speed_mode,
            "gripper_width": params.gripper_width,
            "grip_pressure": params.grip_pressure,
        }
    if kind == PLACE:
        out = {"pre_place": params.pre_place.to_wire(), "post_place": params.post_place.to_wire()}
        if params.target is not None:
            out["target"] = params.target.to_wire()
        if params.offset is not None:
            out["offset"] = params.offset.to_wire()
        return out
    if kind == LOOKAT:
        out = {"world_up": list(map(float, params.world_up))}
        if params.point is not None:
            out["point"] = list(map(float, params.point))
        return out
    if kind == PERCEIVE:
        return {"wait_for_object": params.wait_for_object}
    raise ValueError(f"unknown primitive kind {kind!r}")
