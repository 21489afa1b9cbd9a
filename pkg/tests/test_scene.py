import math

import numpy as np
import pytest

from cobotkit.errors import ObjectNotFound
from cobotkit.geometry import Pose6D, quat_from_axis_angle
from cobotkit.scene import REMEMBERED, VISIBLE, Detection, SceneMemory, load_detection_log


def det(oid, t, xyz=(0, 0, 0), cls="tray"):
    return Detection(object_id=oid, class_id=cls, pose_camera=Pose6D(translation=xyz), timestamp=t)


class TestApplyDetections:
    def test_upsert_new_object(self):
        mem = SceneMemory()
        mem.apply_detections([det("a", 0.0)], Pose6D.identity(), now=0.0)
        obj = mem.query_object("a", 0.0)
        assert obj.status == VISIBLE
        assert obj.class_id == "tray"

    def test_redetection_updates_pose_and_time(self):
        mem = SceneMemory()
        mem.apply_detections([det("a", 0.0, xyz=(1, 0, 0))], Pose6D.identity(), now=0.0)
        mem.apply_detections([det("a", 5.0, xyz=(2, 0, 0))], Pose6D.identity(), now=5.0)
        obj = mem.query_object("a", 5.0)
        assert np.allclose(obj.pose_world.translation, [2, 0, 0])
        assert obj.last_seen == 5.0

    def test_camera_frame_composition(self):
        mem = SceneMemory()
        cam = Pose6D(rotation=quat_from_axis_angle([0, 0, 1], math.pi / 2), translation=[1, 0, 0])
        mem.apply_detections([det("a", 0.0, xyz=(0.5, 0, 0))], cam, now=0.0)
        assert np.allclose(mem.query_object("a", 0.0).pose_world.translation, [1, 0.5, 0], atol=1e-12)

    def test_undetected_objects_untouched(self):
        mem = SceneMemory()
        mem.apply_detections([det("a", 0.0, xyz=(1, 0, 0))], Pose6D.identity(), now=0.0)
        mem.apply_detections([det("b", 1.0)], Pose6D.identity(), now=1.0)
        assert np.allclose(mem.query_object("a", 1.0).pose_world.translation, [1, 0, 0])

    def test_idempotent_at_same_timestamp(self):
        mem = SceneMemory()
        batch = [det("a", 1.0, xyz=(1, 2, 3))]
        mem.apply_detections(batch, Pose6D.identity(), now=1.0)
        before = mem.query_object("a", 1.0)
        mem.apply_detections(batch, Pose6D.identity(), now=1.0)
        after = mem.query_object("a", 1.0)
        assert np.allclose(before.pose_world.translation, after.pose_world.translation)
        assert before.last_seen == after.last_seen


class TestPermanency:
    def test_stale_object_remembered_not_deleted(self):
        mem = SceneMemory(visibility_timeout=1.0)
        mem.apply_detections([det("a", 0.0, xyz=(1, 0, 0))], Pose6D.identity(), now=0.0)
        obj = mem.query_object("a", 10.0)
        assert obj.status == REMEMBERED
        assert np.allclose(obj.pose_world.translation, [1, 0, 0])  # pose kept

    def test_visible_within_timeout(self):
        mem = SceneMemory(visibility_timeout=1.0)
        mem.apply_detections([det("a", 0.0)], Pose6D.identity(), now=0.0)
        assert mem.query_object("a", 0.5).status == VISIBLE
        assert mem.query_object("a", 1.5).status == REMEMBERED

    def test_pose_is_latest_detection_regardless_of_time(self):
        mem = SceneMemory()
        for k in range(5):
            mem.apply_detections([det("a", float(k), xyz=(k, 0, 0))], Pose6D.identity(), now=float(k))
        assert np.allclose(mem.query_object("a", 100.0).pose_world.translation, [4, 0, 0])

    def test_revisibility_after_redetection(self):
        mem = SceneMemory(visibility_timeout=1.0)
        mem.apply_detections([det("a", 0.0)], Pose6D.identity(), now=0.0)
        assert mem.query_object("a", 5.0).status == REMEMBERED
        mem.apply_detections([det("a", 5.0)], Pose6D.identity(), now=5.0)
        assert mem.query_object("a", 5.0).status == VISIBLE

    def test_explicit_clear(self):
        mem = SceneMemory()
        mem.apply_detections([det("a", 0.0)], Pose6D.identity(), now=0.0)
        mem.clear()
        assert len(mem) == 0


class TestQueries:
    def test_unknown_id(self):
        with pytest.raises(ObjectNotFound):
            SceneMemory().query_object("ghost", 0.0)

    def test_query_by_class(self):
        mem = SceneMemory()
        mem.apply_detections([det("a", 0.0), det("b", 0.0, cls="cup")], Pose6D.identity(), now=0.0)
        assert [o.object_id for o in mem.query_by_class("tray", 0.0)] == ["a"]

    def test_object_frame_to_world_identity(self):
        mem = SceneMemory()
        mem.apply_detections([det("a", 0.0, xyz=(1, 2, 3))], Pose6D.identity(), now=0.0)
        out = mem.object_frame_to_world("a", Pose6D.identity(), 0.0)
        assert np.allclose(out.translation, mem.query_object("a", 0.0).pose_world.translation)

    def test_object_frame_offset(self):
        mem = SceneMemory()
        mem.apply_detections([det("a", 0.0)], Pose6D.identity(), now=0.0)
        out = mem.object_frame_to_world("a", Pose6D(translation=[0, 0, 0.1]), 0.0)
        assert np.allclose(out.translation, [0, 0, 0.1], atol=1e-12)

    def test_object_frame_rotated(self):
        mem = SceneMemory()
        rot90 = Detection(
            object_id="a",
            class_id="tray",
            pose_camera=Pose6D(rotation=quat_from_axis_angle([0, 0, 1], math.pi / 2)),
            timestamp=0.0,
        )
        mem.apply_detections([rot90], Pose6D.identity(), now=0.0)
        out = mem.object_frame_to_world("a", Pose6D(translation=[0.1, 0, 0]), 0.0)
        assert np.allclose(out.translation, [0, 0.1, 0], atol=1e-12)


class TestDetectionLog:
    def test_jsonl_round_trip(self, tmp_path):
        path = tmp_path / "dets.jsonl"
        entries = [det("a", 0.5, xyz=(1, 2, 3)), det("b", 0.1)]
        path.write_text("".join(d.to_jsonl_line() + "\n" for d in entries))
        loaded = load_detection_log(path)
        assert [d.object_id for d in loaded] == ["b", "a"]  # sorted by time
        assert np.allclose(loaded[1].pose_camera.translation, [1, 2, 3])
