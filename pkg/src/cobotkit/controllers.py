"""Task-space PID with dual-gain scheduling plus the teleoperation
offset/target mechanism.

The control law is component-wise PID on the 6-D pose error

    xdot = Kp e + Ki int(e dt) + Kd de/dt

with rectangular integration, backward-difference derivative (zero on the
first step), per-component integral clamping, and a norm cap on the output
twist. Two gain sets (slow for distant targets, fast for close ones) are
scheduled on a mixed error norm with a hysteresis band so the switch cannot
chatter.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import kernels
from .errors import TeleopError
from .geometry import Pose6D, Twist, quat_conjugate, quat_multiply

SLOW = "slow"
FAST = "fast"

# Radians are worth 0.1 m in the scheduling norm (config-overridable).
ANGULAR_WEIGHT = 0.1


def pose_error(x_c: Pose6D, x: Pose6D) -> np.ndarray:
    """6-D error: translation difference and rotation vector of R_c R^-1."""
    return kernels.pose_error6(x_c.rotation, x_c.translation, x.rotation, x.translation)


def error_norm(e: np.ndarray, angular_weight: float = ANGULAR_WEIGHT) -> float:
    e = np.asarray(e, dtype=float)
    return float(np.linalg.norm(e[:3]) + angular_weight * np.linalg.norm(e[3:]))


@dataclass(frozen=True)
class GainSet:
    kp: np.ndarray
    ki: np.ndarray
    kd: np.ndarray

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            v = np.asarray(getattr(self, name), dtype=float)
            v = np.full(6, float(v)) if v.ndim == 0 else v.reshape(6).copy()
            if np.any(v < 0):
                raise ValueError(f"{name} gains must be >= 0")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @staticmethod
    def uniform(kp: float, ki: float = 0.0, kd: float = 0.0) -> "GainSet":
        return GainSet(kp=np.full(6, kp), ki=np.full(6, ki), kd=np.full(6, kd))


@dataclass(frozen=True)
class SchedulerConfig:
    threshold: float = 0.05  # meters on the mixed norm
    hysteresis: float = 0.01
    slow_gains: GainSet = field(default_factory=lambda: GainSet.uniform(0.5, 0.0, 0.05))
    fast_gains: GainSet = field(default_factory=lambda: GainSet.uniform(2.0, 0.0, 0.05))
    angular_weight: float = ANGULAR_WEIGHT

    def __post_init__(self):
        if not 0.0 < self.hysteresis < self.threshold:
            raise ValueError("hysteresis band must satisfy 0 < h < threshold")

    def gains(self, mode: str) -> GainSet:
        return self.slow_gains if mode == SLOW else self.fast_gains


@dataclass(frozen=True)
class ControllerConfig:
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    max_linear: float = 0.25  # m/s
    max_angular: float = 1.0  # rad/s
    windup: float = 0.5

    @staticmethod
    def from_json_dict(doc: dict) -> "ControllerConfig":
        def gainset(d):
            return GainSet(kp=np.asarray(d["kp"], dtype=float), ki=np.asarray(d["ki"], dtype=float), kd=np.asarray(d["kd"], dtype=float))

        base = ControllerConfig()
        sched = SchedulerConfig(
            threshold=float(doc.get("threshold_m", base.scheduler.threshold)),
            hysteresis=float(doc.get("hysteresis_m", base.scheduler.hysteresis)),
            slow_gains=gainset(doc["slow"]) if "slow" in doc else base.scheduler.slow_gains,
            fast_gains=gainset(doc["fast"]) if "fast" in doc else base.scheduler.fast_gains,
        )
        return ControllerConfig(
            scheduler=sched,
            max_linear=float(doc.get("max_linear_mps", base.max_linear)),
            max_angular=float(doc.get("max_angular_rps", base.max_angular)),
            windup=float(doc.get("windup", base.windup)),
        )

    def to_json_dict(self) -> dict:
        s = self.scheduler

        def gd(g):
            return {"kp": list(g.kp), "ki": list(g.ki), "kd": list(g.kd)}

        return {
            "slow": gd(s.slow_gains),
            "fast": gd(s.fast_gains),
            "threshold_m": s.threshold,
            "hysteresis_m": s.hysteresis,
            "max_linear_mps": self.max_linear,
            "max_angular_rps": self.max_angular,
            "windup": self.windup,
        }


@dataclass(frozen=True)
class PidState:
    integral: np.ndarray = field(default_factory=lambda: np.zeros(6))
    prev_error: np.ndarray | None = None
    mode: str = SLOW
    last_time: float = 0.0

    @staticmethod
    def initial(mode: str = SLOW) -> "PidState":
        return PidState(mode=mode)

    def reset(self) -> "PidState":
        """Zero the memory terms; keeps the current mode."""
        return PidState(mode=self.mode, last_time=self.last_time)


def select_mode(e: np.ndarray, cfg: SchedulerConfig, current: str) -> str:
    """Hysteretic slow/fast schedule on the mixed error norm."""
    n = error_norm(e, cfg.angular_weight)
    if n > cfg.threshold + 0.5 * cfg.hysteresis:
        return SLOW
    if n < cfg.threshold - 0.5 * cfg.hysteresis:
        return FAST
    return current


def pid_step(state: PidState, e: np.ndarray, dt: float, gains: GainSet, cfg: ControllerConfig | None = None):
    """One controller tick: (commanded Twist, next PidState)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    cfg = cfg or ControllerConfig()
    e = np.asarray(e, dtype=float).reshape(6)
    integral = np.clip(state.integral + e * dt, -cfg.windup, cfg.windup)
    if state.prev_error is None:
        derivative = np.zeros(6)
    else:
        derivative = (e - state.prev_error) / dt
    out = gains.kp * e + gains.ki * integral + gains.kd * derivative

    lin, ang = out[:3], out[3:]
    lin_n = float(np.linalg.norm(lin))
    if lin_n > cfg.max_linear:
        lin = lin * (cfg.max_linear / lin_n)
    ang_n = float(np.linalg.norm(ang))
    if ang_n > cfg.max_angular:
        ang = ang * (cfg.max_angular / ang_n)

    next_state = PidState(integral=integral, prev_error=e.copy(), mode=state.mode, last_time=state.last_time + dt)
    return Twist(linear=lin, angular=ang), next_state


@dataclass(frozen=True)
class TeleopSession:
    """Offset bookkeeping created each time teleoperation is (re)activated.

    The target replicates the controller's world-frame deltas starting from
    the ee pose at activation, so the commanded target is continuous: at the
    activation instant it equals the current ee pose exactly.
    """

    ctrl_origin: Pose6D
    ee_origin: Pose6D
    active: bool = True
    frame: str = "world"  # "world" or "tool" rotation-delta convention


def teleop_activate(ee_pose: Pose6D, ctrl_pose: Pose6D, frame: str = "world") -> TeleopSession:
    if frame not in ("world", "tool"):
        raise ValueError("frame must be 'world' or 'tool'")
    return TeleopSession(ctrl_origin=ctrl_pose, ee_origin=ee_pose, active=True, frame=frame)


def teleop_deactivate(session: TeleopSession) -> TeleopSession:
    return replace(session, active=False)


def teleop_target(session: TeleopSession, ctrl_pose: Pose6D) -> Pose6D:
    """Target pose x_c for the PID given the current controller pose.

    Translation deltas are replicated as world-frame offsets; the rotation
    delta is applied about the ee origin point (world convention) or in the
    tool frame when the session was activated with frame="tool".
    """
    if not session.active:
        raise TeleopError("teleop session is not active; re-activate first")
    dt_world = ctrl_pose.translation - session.ctrl_origin.translation
    if session.frame == "world":
        dq = quat_multiply(ctrl_pose.rotation, quat_conjugate(session.ctrl_origin.rotation))
        rot = quat_multiply(dq, session.ee_origin.rotation)
    else:
        dq = quat_multiply(quat_conjugate(session.ctrl_origin.rotation), ctrl_pose.rotation)
        rot = quat_multiply(session.ee_origin.rotation, dq)
    return Pose6D(rotation=rot, translation=session.ee_origin.translation + dt_world)
