"""Transform tree: named frames rooted at "world" with timestamped edges.

Writes are serialized through a lock and replace an immutable version map,
so readers (and snapshots) always observe a consistent tree without locking.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from .errors import FrameError
from .geometry import Pose6D

ROOT = "world"


@dataclass(frozen=True)
class _Edge:
    parent: str
    pose: Pose6D  # parent -> child
    stamp: float


class TransformTree:
    def __init__(self):
        self._lock = threading.Lock()
        self._edges: dict[str, _Edge] = {}

    def set_transform(self, parent: str, child: str, pose: Pose6D, stamp: float = 0.0) -> None:
        """Insert or update the parent->child edge; re-parenting is allowed."""
        if child == ROOT:
            raise FrameError("cannot re-parent the world root")
        with self._lock:
            edges = dict(self._edges)
            if parent != ROOT and parent not in edges:
                raise FrameError(f"unknown parent frame {parent!r}")
            # Reject edges that would close a cycle.
            node = parent
            while node != ROOT:
                if node == child:
                    raise FrameError(f"edge {parent!r}->{child!r} would create a cycle")
                node = edges[node].parent
            edges[child] = _Edge(parent=parent, pose=pose, stamp=stamp)
            self._edges = edges

    def frames(self) -> list:
        return [ROOT, *self._edges.keys()]

    def has_frame(self, name: str) -> bool:
        return name == ROOT or name in self._edges

    def _pose_in_root(self, edges: dict, frame: str) -> Pose6D:
        if frame == ROOT:
            return Pose6D.identity()
        chain = []
        node = frame
        while node != ROOT:
            edge = edges.get(node)
            if edge is None:
                raise FrameError(f"unknown frame {node!r}")
            chain.append(edge.pose)
            node = edge.parent
        pose = Pose6D.identity()
        for edge_pose in reversed(chain):
            pose = pose.compose(edge_pose)
        return pose

    def lookup(self, from_frame: str, to_frame: str) -> Pose6D:
        """Pose of to_frame expressed in from_frame."""
        edges = self._edges  # consistent snapshot reference
        for name in (from_frame, to_frame):
            if name != ROOT and name not in edges:
                raise FrameError(f"unknown frame {name!r}")
        if from_frame == to_frame:
            return Pose6D.identity()
        world_from = self._pose_in_root(edges, from_frame)
        world_to = self._pose_in_root(edges, to_frame)
        return world_from.inverse().compose(world_to)

    def snapshot(self) -> "TransformTree":
        """Frozen copy sharing no mutable state with the live tree."""
        out = TransformTree()
        out._edges = self._edges
        return out


def lookup_transform(tree: TransformTree, from_frame: str, to_frame: str) -> Pose6D:
    return tree.lookup(from_frame, to_frame)
