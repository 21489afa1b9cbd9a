"""Scene-layout memory: 6D object poses with object permanency.

Objects are never deleted when they leave the camera's view; they keep
their last observed pose and flip to "remembered" status once unseen for
longer than the visibility timeout, so primitives can still target them.
Detections arrive in the camera frame and are converted to world using the
camera pose at the detection instant (the camera is in-hand, so it moves).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .errors import ObjectNotFound
from .geometry import Pose6D

VISIBLE = "visible"
REMEMBERED = "remembered"

DEFAULT_VISIBILITY_TIMEOUT = 1.0


@dataclass(frozen=True)
class Detection:
    object_id: str
    pose_camera: Pose6D
    timestamp: float
    class_id: str = ""

    @staticmethod
    def from_jsonl_line(line: str) -> "Detection":
        doc = json.loads(line)
        return Detection(
            object_id=doc["id"],
            class_id=doc.get("class", ""),
            pose_camera=Pose6D.from_wire(doc["pose_camera"]),
            timestamp=float(doc["t"]),
        )

    def to_jsonl_line(self) -> str:
        return json.dumps(
            {"t": self.timestamp, "id": self.object_id, "class": self.class_id, "pose_camera": self.pose_camera.to_wire()}
        )


@dataclass(frozen=True)
class SceneObject:
    object_id: str
    class_id: str
    pose_world: Pose6D
    last_seen: float
    status: str = VISIBLE


class SceneMemory:
    """Mutable store updated by the single perception path; queries return
    immutable SceneObject values with status computed for the query time."""

    def __init__(self, visibility_timeout: float = DEFAULT_VISIBILITY_TIMEOUT):
        if visibility_timeout <= 0:
            raise ValueError("visibility timeout must be positive")
        self.visibility_timeout = visibility_timeout
        self._objects: dict[str, SceneObject] = {}
        self.last_update: float | None = None

    def __len__(self):
        return len(self._objects)

    def __contains__(self, object_id: str):
        return object_id in self._objects

    def ids(self) -> list:
        return list(self._objects.keys())

    def apply_detections(self, detections, camera_pose_world: Pose6D, now: float) -> "SceneMemory":
        """Upsert each detected object at camera_pose ∘ pose_camera; others untouched."""
        for det in detections:
            pose_world = camera_pose_world.compose(det.pose_camera)
            prev = self._objects.get(det.object_id)
            class_id = det.class_id or (prev.class_id if prev else "")
            self._objects[det.object_id] = SceneObject(
                object_id=det.object_id,
                class_id=class_id,
                pose_world=pose_world,
                last_seen=now,
                status=VISIBLE,
            )
        if detections:
            self.last_update = now
        return self

    def _with_status(self, obj: SceneObject, now: float) -> SceneObject:
        stale = (now - obj.last_seen) > self.visibility_timeout
        status = REMEMBERED if stale else VISIBLE
        return obj if obj.status == status else replace(obj, status=status)

    def query_object(self, object_id: str, now: float) -> SceneObject:
        obj = self._objects.get(object_id)
        if obj is None:
            raise ObjectNotFound(f"no object {object_id!r} in scene memory")
        return self._with_status(obj, now)

    def query_by_class(self, class_id: str, now: float) -> list:
        return [self._with_status(o, now) for o in self._objects.values() if o.class_id == class_id]

    def all_objects(self, now: float) -> list:
        return [self._with_status(o, now) for o in self._objects.values()]

    def object_frame_to_world(self, object_id: str, local: Pose6D, now: float) -> Pose6D:
        return self.query_object(object_id, now).pose_world.compose(local)

    def clear(self) -> None:
        """Explicit wipe; timeouts alone never delete objects."""
        self._objects.clear()
        self.last_update = None

    def snapshot(self, now: float) -> dict:
        return {o.object_id: self._with_status(o, now) for o in self._objects.values()}


def load_detection_log(path) -> list:
    """Detection replay file: one JSON object per line, sorted by time."""
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(Detection.from_jsonl_line(line))
    out.sort(key=lambda d: d.timestamp)
    return out
