import json
import math

import numpy as np
import pytest

from cobotkit.errors import ModelError
from cobotkit.geometry import Pose6D
from cobotkit.robot import Joint, RobotModel, default_seven_dof, planar_two_link


class TestModelValidation:
    def test_at_least_one_joint(self):
        with pytest.raises(ModelError):
            RobotModel(joints=())

    def test_axis_must_be_unit(self):
        with pytest.raises(ModelError):
            Joint("j", np.array([0.0, 0.0, 2.0]), Pose6D.identity())

    def test_limits_ordered(self):
        with pytest.raises(ModelError):
            Joint("j", np.array([0.0, 0.0, 1.0]), Pose6D.identity(), lo=1.0, hi=-1.0)

    def test_velocity_limit_positive(self):
        with pytest.raises(ModelError):
            Joint("j", np.array([0.0, 0.0, 1.0]), Pose6D.identity(), velocity_limit=0.0)

    def test_duplicate_joint_names(self):
        j = Joint("same", np.array([0.0, 0.0, 1.0]), Pose6D.identity())
        with pytest.raises(ModelError):
            RobotModel(joints=(j, j))

    def test_unknown_joint_type(self):
        with pytest.raises(ModelError):
            Joint("j", np.array([0.0, 0.0, 1.0]), Pose6D.identity(), type="spherical")

    def test_mid_range(self):
        model = planar_two_link()
        assert np.allclose(model.mid_range(), [0.0, 0.0])


class TestModelJson:
    def test_document_field_names(self):
        # the JSON document format is normative: exact field names
        doc = default_seven_dof().to_json_dict()
        assert set(doc) == {"joints", "ee_offset", "camera_offset"}
        joint = doc["joints"][0]
        assert set(joint) == {"name", "type", "axis", "origin", "limits"}
        assert set(joint["origin"]) == {"xyz", "quat_wxyz"}
        assert set(joint["limits"]) == {"lo", "hi", "vel"}

    def test_round_trip(self):
        model = default_seven_dof()
        back = RobotModel.from_json_dict(model.to_json_dict())
        assert back.n == model.n
        for a, b in zip(model.joints, back.joints):
            assert a.name == b.name and a.type == b.type
            assert np.allclose(a.axis, b.axis)
            assert np.allclose(a.origin.translation, b.origin.translation)
            assert np.allclose(a.origin.rotation, b.origin.rotation)
            assert (a.lo, a.hi, a.velocity_limit) == (b.lo, b.hi, b.velocity_limit)
        assert np.allclose(back.ee_frame.translation, model.ee_frame.translation)
        assert np.allclose(back.camera_frame.translation, model.camera_frame.translation)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "arm.json"
        path.write_text(json.dumps(default_seven_dof().to_json_dict()))
        model = RobotModel.load(path)
        assert model.n == 7

    def test_malformed_document(self):
        with pytest.raises(ModelError):
            RobotModel.from_json_dict({"joints": [{"name": "a"}]})

    def test_prismatic_type_preserved(self):
        doc = {
            "joints": [
                {
                    "name": "slide",
                    "type": "prismatic",
                    "axis": [0, 0, 1],
                    "origin": {"xyz": [0, 0, 0], "quat_wxyz": [1, 0, 0, 0]},
                    "limits": {"lo": -0.5, "hi": 0.5, "vel": 0.2},
                }
            ],
            "ee_offset": {"xyz": [0, 0, 0], "quat_wxyz": [1, 0, 0, 0]},
            "camera_offset": {"xyz": [0, 0, 0], "quat_wxyz": [1, 0, 0, 0]},
        }
        model = RobotModel.from_json_dict(doc)
        assert model.joints[0].type == "prismatic"
        assert math.isclose(model.velocity_limits[0], 0.2)
