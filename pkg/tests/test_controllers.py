import math

import numpy as np
import pytest

from cobotkit.controllers import (
    FAST,
    SLOW,
    ControllerConfig,
    GainSet,
    PidState,
    SchedulerConfig,
    error_norm,
    pid_step,
    pose_error,
    select_mode,
    teleop_activate,
    teleop_deactivate,
    teleop_target,
)
from cobotkit.errors import TeleopError
from cobotkit.geometry import Pose6D, quat_from_axis_angle, quat_to_matrix

from .conftest import random_pose


def rz(deg, t=(0, 0, 0)):
    return Pose6D(rotation=quat_from_axis_angle([0, 0, 1], math.radians(deg)), translation=t)


class TestPoseError:
    def test_identical_poses(self):
        rng = np.random.default_rng(41)
        p = random_pose(rng)
        assert np.allclose(pose_error(p, p), 0, atol=1e-12)

    def test_pure_translation(self):
        x = Pose6D(translation=[0.5, 0, 0])
        xc = Pose6D(translation=[0.6, 0, 0])
        assert np.allclose(pose_error(xc, x), [0.1, 0, 0, 0, 0, 0], atol=1e-12)

    def test_pure_rotation_axis_angle(self):
        x = Pose6D(translation=[1, 2, 3])
        xc = rz(90, t=(1, 2, 3))
        e = pose_error(xc, x)
        assert np.allclose(e[:3], 0, atol=1e-12)
        assert np.allclose(e[3:], [0, 0, math.pi / 2], atol=1e-12)

    def test_angle_never_exceeds_pi(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            a, b = random_pose(rng), random_pose(rng)
            assert np.linalg.norm(pose_error(a, b)[3:]) <= math.pi + 1e-9


class TestPidStep:
    def test_proportional_only(self):
        gains = GainSet.uniform(2.0)
        twist, _ = pid_step(PidState.initial(), np.array([0.1, 0, 0, 0, 0, 0]), 0.01, gains)
        assert np.allclose(twist.linear, [0.2, 0, 0], atol=1e-12)
        assert np.allclose(twist.angular, 0)

    def test_integral_rectangular(self):
        gains = GainSet.uniform(0.0, ki=1.0)
        e = np.array([0.1, 0, 0, 0, 0, 0])
        state = PidState.initial()
        _, state = pid_step(state, e, 0.5, gains)
        twist, _ = pid_step(state, e, 0.5, gains)
        # integral = 0.1*0.5 + 0.1*0.5 = 0.1
        assert twist.linear[0] == pytest.approx(0.1)

    def test_derivative_backward_difference(self):
        gains = GainSet.uniform(0.0, kd=1.0)
        cfg = ControllerConfig(max_linear=10.0)  # keep the cap out of the way
        state = PidState.initial()
        _, state = pid_step(state, np.zeros(6), 0.1, gains, cfg)
        twist, _ = pid_step(state, np.array([0.1, 0, 0, 0, 0, 0]), 0.1, gains, cfg)
        assert twist.linear[0] == pytest.approx(1.0)

    def test_derivative_zero_on_first_step(self):
        gains = GainSet.uniform(0.0, kd=10.0)
        twist, _ = pid_step(PidState.initial(), np.array([1, 0, 0, 0, 0, 0]), 0.1, gains)
        assert np.allclose(twist.as_vector(), 0)

    def test_integral_windup_clamp(self):
        cfg = ControllerConfig(windup=0.5)
        gains = GainSet.uniform(0.0, ki=1.0)
        state = PidState.initial()
        e = np.array([10.0, 0, 0, 0, 0, 0])
        for _ in range(100):
            _, state = pid_step(state, e, 0.1, gains, cfg)
            assert np.all(np.abs(state.integral) <= cfg.windup + 1e-12)

    def test_twist_norm_caps(self):
        cfg = ControllerConfig(max_linear=0.25, max_angular=1.0)
        gains = GainSet.uniform(100.0)
        twist, _ = pid_step(PidState.initial(), np.array([1, 1, 0, 2, 0, 0]), 0.01, gains, cfg)
        assert np.linalg.norm(twist.linear) <= 0.25 + 1e-12
        assert np.linalg.norm(twist.angular) <= 1.0 + 1e-12

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ValueError):
            pid_step(PidState.initial(), np.zeros(6), 0.0, GainSet.uniform(1.0))

    def test_negative_gains_rejected(self):
        with pytest.raises(ValueError):
            GainSet.uniform(-1.0)


class TestScheduler:
    CFG = SchedulerConfig(threshold=0.05, hysteresis=0.01)

    def _err(self, norm):
        return np.array([norm, 0, 0, 0, 0, 0])

    def test_large_error_slow(self):
        assert select_mode(self._err(0.2), self.CFG, FAST) == SLOW

    def test_small_error_fast(self):
        assert select_mode(self._err(0.01), self.CFG, SLOW) == FAST

    def test_hysteresis_band_keeps_mode(self):
        assert select_mode(self._err(0.05), self.CFG, SLOW) == SLOW
        assert select_mode(self._err(0.05), self.CFG, FAST) == FAST

    def test_mixed_norm_weights_angle(self):
        e = np.array([0.0, 0, 0, 1.0, 0, 0])  # 1 rad -> 0.1 m equivalent
        assert error_norm(e) == pytest.approx(0.1)

    def test_no_chatter_on_noisy_monotone_trajectory(self):
        # Additive noise below h/2 must produce exactly one slow->fast switch.
        rng = np.random.default_rng(43)
        mode = SLOW
        switches = 0
        prev = mode
        for k in range(1000):
            norm = 0.2 * (1 - k / 999) + rng.uniform(-0.004, 0.004)
            mode = select_mode(self._err(abs(norm)), self.CFG, mode)
            if mode != prev:
                switches += 1
                prev = mode
        assert mode == FAST
        assert switches == 1

    def test_invalid_band_rejected(self):
        with pytest.raises(ValueError):
            SchedulerConfig(threshold=0.01, hysteresis=0.02)


def teleop_oracle(ee0_m, ctrl0_m, ctrl_m):
    """Independent 4x4-matrix evaluation of the world-frame delta rule."""
    d_rot = ctrl_m[:3, :3] @ ctrl0_m[:3, :3].T
    out = np.eye(4)
    out[:3, :3] = d_rot @ ee0_m[:3, :3]
    out[:3, 3] = ee0_m[:3, 3] + (ctrl_m[:3, 3] - ctrl0_m[:3, 3])
    return out


class TestTeleop:
    def test_activation_fixed_point(self):
        rng = np.random.default_rng(44)
        ee, ctrl = random_pose(rng), random_pose(rng)
        session = teleop_activate(ee, ctrl)
        target = teleop_target(session, ctrl)
        assert np.linalg.norm(pose_error(target, ee)) < 1e-12

    def test_pure_translation_replicated(self):
        rng = np.random.default_rng(45)
        ee, ctrl = random_pose(rng), random_pose(rng)
        session = teleop_activate(ee, ctrl)
        moved = Pose6D(rotation=ctrl.rotation, translation=ctrl.translation + [0.1, -0.05, 0.2])
        target = teleop_target(session, moved)
        assert np.allclose(target.translation, ee.translation + [0.1, -0.05, 0.2], atol=1e-12)
        assert np.allclose(target.rotation, ee.rotation, atol=1e-12)

    def test_world_rotation_in_place(self):
        ee = Pose6D(translation=[0.5, 0.0, 0.3])
        ctrl = Pose6D(translation=[0, 1, 0])
        session = teleop_activate(ee, ctrl)
        target = teleop_target(session, rz(90, t=(0, 1, 0)))
        assert np.allclose(target.translation, ee.translation, atol=1e-12)
        expected = quat_to_matrix(rz(90).rotation) @ quat_to_matrix(ee.rotation)
        assert np.allclose(quat_to_matrix(target.rotation), expected, atol=1e-12)

    def test_composite_move_matches_matrix_oracle(self):
        # Delta = translate (0, 0.1, 0) plus a 45 degree world-z rotation.
        rng = np.random.default_rng(46)
        world_rot = rz(45)
        for _ in range(50):
            ee, ctrl0 = random_pose(rng), random_pose(rng)
            ctrl1 = Pose6D(
                rotation=world_rot.compose(ctrl0).rotation,
                translation=ctrl0.translation + [0, 0.1, 0],
            )
            session = teleop_activate(ee, ctrl0)
            target = teleop_target(session, ctrl1)
            expected = teleop_oracle(ee.to_matrix(), ctrl0.to_matrix(), ctrl1.to_matrix())
            assert np.allclose(target.to_matrix(), expected, atol=1e-9)

    def test_pause_resume_reactivation(self):
        rng = np.random.default_rng(47)
        ee0, ctrl0 = random_pose(rng), random_pose(rng)
        session = teleop_activate(ee0, ctrl0)
        session = teleop_deactivate(session)
        with pytest.raises(TeleopError):
            teleop_target(session, ctrl0)
        # controller moved arbitrarily while paused; re-activation is jump-free
        ctrl1, ee1 = random_pose(rng), random_pose(rng)
        session = teleop_activate(ee1, ctrl1)
        assert np.linalg.norm(pose_error(teleop_target(session, ctrl1), ee1)) < 1e-12

    def test_tool_frame_convention(self):
        ee = rz(90, t=(0.4, 0, 0.2))
        ctrl0 = Pose6D()
        session = teleop_activate(ee, ctrl0, frame="tool")
        target = teleop_target(session, rz(10))
        # delta applied in the tool frame: R = R_ee * dR
        expected = quat_to_matrix(ee.rotation) @ quat_to_matrix(rz(10).rotation)
        assert np.allclose(quat_to_matrix(target.rotation), expected, atol=1e-12)

    def test_activation_continuity_property(self):
        rng = np.random.default_rng(48)
        for _ in range(100):
            ee, ctrl = random_pose(rng), random_pose(rng)
            session = teleop_activate(ee, ctrl)
            assert np.linalg.norm(pose_error(teleop_target(session, ctrl), ee)) < 1e-12


class TestConfigJson:
    def test_round_trip(self):
        cfg = ControllerConfig()
        doc = cfg.to_json_dict()
        cfg2 = ControllerConfig.from_json_dict(doc)
        assert cfg2.max_linear == cfg.max_linear
        assert np.allclose(cfg2.scheduler.slow_gains.kp, cfg.scheduler.slow_gains.kp)
        assert cfg2.scheduler.threshold == cfg.scheduler.threshold

    def test_partial_document_uses_defaults(self):
        cfg = ControllerConfig.from_json_dict({"max_linear_mps": 0.5})
        assert cfg.max_linear == 0.5
        assert cfg.windup == ControllerConfig().windup
