import numpy as np
import pytest

from cobotkit.errors import GraspError, ObjectNotFound
from cobotkit.geometry import Pose6D, quat_from_axis_angle
from cobotkit.kinematics import ee_pose
from cobotkit.robot import HOME_SEVEN_DOF, default_seven_dof, planar_two_link
from cobotkit.sim import SimObject, SimWorld, load_world_objects


def box(oid, xyz, half=(0.05, 0.05, 0.05), cls="box"):
    return SimObject(object_id=oid, class_id=cls, pose_world=Pose6D(translation=xyz), half_extents=half)


def world_at_ee(model=None, objects=None, q0=None):
    model = model or default_seven_dof()
    return SimWorld(model, q0=q0 if q0 is not None else HOME_SEVEN_DOF, objects=objects or [])


class TestStep:
    def test_zero_velocity_only_advances_time(self):
        w = world_at_ee()
        q_before = w.joints.positions.copy()
        w.step(np.zeros(7))
        assert np.array_equal(w.joints.positions, q_before)
        assert w.time == pytest.approx(0.004)

    def test_euler_integration(self):
        w = world_at_ee(planar_two_link(), q0=[0.0, 0.0])
        w.step(np.array([0.1, 0.0]), dt=0.1)
        assert w.joints.positions[0] == pytest.approx(0.01)

    def test_velocity_clamp(self):
        model = planar_two_link()  # vel limit 2.5 rad/s
        w = SimWorld(model, q0=[0.0, 0.0])
        w.step(np.array([100.0, 0.0]), dt=0.1)
        assert w.joints.positions[0] == pytest.approx(2.5 * 0.1)

    def test_position_limits_enforced(self):
        model = planar_two_link()
        lo, hi = model.position_limits
        w = SimWorld(model, q0=[hi[0] - 0.01, 0.0])
        for _ in range(100):
            w.step(np.array([2.5, 0.0]), dt=0.1)
        assert w.joints.positions[0] <= hi[0]

    def test_velocity_state_reflects_clamping(self):
        w = world_at_ee(planar_two_link(), q0=[0.0, 0.0])
        w.step(np.array([100.0, 0.0]), dt=0.1)
        assert w.joints.velocities[0] == pytest.approx(2.5)

    def test_determinism_bit_identical(self):
        rng = np.random.default_rng(51)
        cmds = rng.uniform(-1, 1, (200, 7))

        def run():
            w = world_at_ee()
            for c in cmds:
                w.step(c)
            return w.joints.positions.copy()

        assert np.array_equal(run(), run())

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ValueError):
            world_at_ee().step(np.zeros(7), dt=0.0)


class TestAttachment:
    def _world_with_box_at_ee(self, offset=(0, 0, 0)):
        model = default_seven_dof()
        ee = ee_pose(model, HOME_SEVEN_DOF)
        obj = box("target", ee.translation + np.asarray(offset), half=(0.02, 0.02, 0.02))
        return SimWorld(model, q0=HOME_SEVEN_DOF, objects=[obj])

    def test_attach_then_move_rigidly(self):
        w = self._world_with_box_at_ee()
        w.attach("target")
        rel_before = w.ee_pose().inverse().compose(w.objects["target"].pose_world)
        for _ in range(100):
            w.step(np.array([0.2, 0.1, -0.1, 0.2, 0.0, 0.1, 0.3]))
        rel_after = w.ee_pose().inverse().compose(w.objects["target"].pose_world)
        assert np.allclose(rel_before.translation, rel_after.translation, atol=1e-12)
        assert np.allclose(rel_before.rotation, rel_after.rotation, atol=1e-12)

    def test_detach_freezes_object(self):
        w = self._world_with_box_at_ee()
        w.attach("target")
        w.step(np.array([0.1, 0, 0, 0, 0, 0, 0.2]))
        w.detach()
        frozen = w.objects["target"].pose_world
        for _ in range(50):
            w.step(np.array([0.1, 0.1, 0, -0.1, 0, 0.1, 0]))
        assert np.allclose(w.objects["target"].pose_world.translation, frozen.translation)

    def test_attach_out_of_tolerance(self):
        w = self._world_with_box_at_ee(offset=(0.05 + 0.02, 0, 0))  # 50 mm from surface
        with pytest.raises(GraspError):
            w.attach("target")

    def test_attach_just_inside_tolerance(self):
        w = self._world_with_box_at_ee(offset=(0.02 + 0.009, 0, 0))  # 9 mm from surface
        w.attach("target")
        assert w.gripper.attached_object == "target"

    @pytest.mark.parametrize("edge", [0.007, 0.05, 0.2])
    def test_grasp_tolerance_across_sample_sizes(self, edge):
        # 7 mm through 200 mm edge lengths all obey the same tolerance logic
        half = edge / 2
        model = default_seven_dof()
        ee = ee_pose(model, HOME_SEVEN_DOF)
        at_center = box("s", ee.translation, half=(half, half, half))
        w = SimWorld(model, q0=HOME_SEVEN_DOF, objects=[at_center])
        w.attach("s")
        assert w.gripper.attached_object == "s"

        near = box("s", ee.translation + np.array([half + 0.009, 0, 0]), half=(half, half, half))
        w = SimWorld(model, q0=HOME_SEVEN_DOF, objects=[near])
        w.attach("s")
        assert w.gripper.attached_object == "s"

        far = box("s", ee.translation + np.array([half + 0.011, 0, 0]), half=(half, half, half))
        w = SimWorld(model, q0=HOME_SEVEN_DOF, objects=[far])
        with pytest.raises(GraspError):
            w.attach("s")

    def test_attach_unknown_object(self):
        with pytest.raises(ObjectNotFound):
            world_at_ee().attach("ghost")

    def test_detach_without_attachment(self):
        with pytest.raises(ObjectNotFound):
            world_at_ee().detach()


class TestContacts:
    def _world_with_box(self, box_center, half=(0.05, 0.05, 0.05), rot=None):
        model = default_seven_dof()
        pose = Pose6D(rotation=rot if rot is not None else [1, 0, 0, 0], translation=box_center)
        obj = SimObject(object_id="b", class_id="box", pose_world=pose, half_extents=half)
        return SimWorld(model, q0=HOME_SEVEN_DOF, objects=[obj])

    def test_no_contact_far_away(self):
        w = self._world_with_box([10, 10, 10])
        assert w.synth_contacts() == []

    def test_spring_law_on_top_face(self):
        model = default_seven_dof()
        ee = ee_pose(model, HOME_SEVEN_DOF)
        # box top face 2 mm above the ee point -> 2 mm penetration through +z
        center = ee.translation - np.array([0, 0, 0.05 - 0.002])
        w = self._world_with_box(center)
        events = w.synth_contacts()
        assert len(events) == 1
        assert np.allclose(events[0].force, [0, 0, 500 * 0.002], atol=1e-9)

    def test_linearity_in_depth(self):
        model = default_seven_dof()
        ee = ee_pose(model, HOME_SEVEN_DOF)
        f = []
        for depth in (0.002, 0.004):
            center = ee.translation - np.array([0, 0, 0.05 - depth])
            w = self._world_with_box(center)
            f.append(w.synth_contacts()[0].force[2])
        assert f[1] == pytest.approx(2 * f[0])

    def test_normal_follows_box_rotation(self):
        model = default_seven_dof()
        ee = ee_pose(model, HOME_SEVEN_DOF)
        rot = quat_from_axis_angle([1, 0, 0], np.pi / 2)  # box +z now points along world -y
        center = ee.translation + np.array([0, 0.05 - 0.002, 0])
        w = self._world_with_box(center, rot=rot)
        events = w.synth_contacts()
        assert len(events) == 1
        direction = events[0].force / np.linalg.norm(events[0].force)
        assert np.allclose(direction, [0, -1, 0], atol=1e-9)

    def test_surface_contact_not_reported(self):
        model = default_seven_dof()
        ee = ee_pose(model, HOME_SEVEN_DOF)
        center = ee.translation - np.array([0, 0, 0.05])  # exactly on the face
        w = self._world_with_box(center)
        assert w.synth_contacts() == []


class TestWorldFile:
    def test_load_objects(self):
        doc = {
            "objects": [
                {
                    "id": "a",
                    "class": "tray",
                    "half_extents": [0.06, 0.04, 0.02],
                    "pose": {"xyz": [0.4, 0, 0.02], "quat_wxyz": [1, 0, 0, 0]},
                    "hidden": [[2.0, 7.0]],
                }
            ]
        }
        objs = load_world_objects(doc)
        assert objs[0].object_id == "a"
        assert objs[0].visible_at(1.0)
        assert not objs[0].visible_at(4.0)
        assert objs[0].visible_at(8.0)

    def test_detect_respects_visibility(self):
        obj = box("a", (0.4, 0, 0.1))
        obj.hidden_intervals = ((1.0, 2.0),)
        w = world_at_ee(objects=[obj])
        assert len(w.detect(0.5)) == 1
        assert len(w.detect(1.5)) == 0

    def test_detect_camera_frame_consistency(self):
        obj = box("a", (0.4, 0, 0.1))
        w = world_at_ee(objects=[obj])
        d = w.detect(0.0)[0]
        recovered = w.camera_pose().compose(d.pose_camera)
        assert np.allclose(recovered.translation, [0.4, 0, 0.1], atol=1e-12)

    def test_bad_half_extents(self):
        with pytest.raises(ValueError):
            box("a", (0, 0, 0), half=(0.1, -0.1, 0.1))
