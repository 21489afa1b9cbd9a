"""The engine: one deterministic control loop tying perception, the mux,
the task-space controller, differential IK, the kinematic world and haptic
rendering together.

Time is virtual (tick count x dt), so headless runs are fast and
bit-reproducible; `serve` paces the same loop against the wall clock.
External commands (teleop poses, mode switches, teach captures, task
submissions) arrive through an ordered queue applied between ticks.
"""

from __future__ import annotations

import json
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import controllers, taskflow
from .controllers import (
    ControllerConfig,
    PidState,
    pose_error,
    select_mode,
    teleop_activate,
    teleop_target,
)
from .errors import GraspError, ObjectNotFound, TaskError
from .geometry import Pose6D, quat_rotate
from .haptics import ActuatorLayout, HapticFrame, builtin_patterns, default_layout, render_force_cue
from .kinematics import Registration, diff_ik, forward_kinematics, register_three_point
from .primitives import (
    FAILED,
    RUNNING,
    SUCCEEDED,
    PrimitiveCommand,
    PrimitiveConfig,
    PrimitiveStatus,
    step_primitive,
)
from .robot import HOME_SEVEN_DOF, RobotModel, default_seven_dof
from .scene import SceneMemory
from .sim import DEFAULT_DT, SimWorld
from .taskflow import (
    AUTONOMOUS,
    IDLE,
    TELEOP,
    MuxState,
    StepOutcome,
    TaskDescription,
    TaskResult,
    TeachSession,
    capture_teach_point,
    mux_switch,
    resolve_bindings,
    teach_session_to_primitive,
    validate_task,
)

RECORD_VERSION = 1
DEFAULT_PERCEPTION_PERIOD = 0.1  # 10 Hz synthetic detector


# -- commands ----------------------------------------------------------------


@dataclass(frozen=True)
class CmdMux:
    source: str


@dataclass(frozen=True)
class CmdCtrlPose:
    pose: Pose6D
    seq: int = 0
    activate: bool = False
    pause: bool = False


@dataclass(frozen=True)
class CmdTeachStart:
    object_id: str
    target_class: str = ""


@dataclass(frozen=True)
class CmdTeachCapture:
    phase: str


@dataclass(frozen=True)
class CmdTaskSubmit:
    doc: dict


@dataclass(frozen=True)
class CmdTaskControl:
    action: str  # "start" | "abort"


@dataclass(frozen=True)
class CmdRegisterPoints:
    p0: tuple
    p1: tuple
    p2: tuple
    reference_length: float | None = None


@dataclass(frozen=True)
class CmdClearScene:
    pass


@dataclass
class _RunnerState:
    task: TaskDescription
    resolved: dict = field(default_factory=dict)
    step_index: int = 0
    status: PrimitiveStatus | None = None
    outcomes: list = field(default_factory=list)
    step_started: float = 0.0
    started: float = 0.0
    done: bool = False
    failed: bool = False


class Engine:
    def __init__(
        self,
        model: RobotModel | None = None,
        objects=None,
        q0=None,
        controller_config: ControllerConfig | None = None,
        dt: float = DEFAULT_DT,
        visibility_timeout: float = 1.0,
        perception_period: float = DEFAULT_PERCEPTION_PERIOD,
        q_sec=None,
        layout: ActuatorLayout | None = None,
        detection_log=None,
    ):
        self.model = model or default_seven_dof()
        if q0 is None and model is None:
            q0 = HOME_SEVEN_DOF
        self.world = SimWorld(self.model, q0=q0, objects=objects, dt=dt)
        self._q0atstart = self.world.joints.positions.copy()
        self.dt = dt
        self.cfg = controller_config or ControllerConfig()
        self.scene = SceneMemory(visibility_timeout=visibility_timeout)
        self.pid = PidState.initial()
        self.mux = MuxState()
        self.q_sec = np.asarray(q_sec, dtype=float) if q_sec is not None else self.model.mid_range()
        self.teleop = None
        self.registration = Registration(pose=Pose6D.identity(), scale=1.0)
        self.layout = layout or default_layout()
        self.patterns = builtin_patterns(self.layout)
        self.perception_period = perception_period
        self.tick_count = 0
        self.diagnostics: deque = deque(maxlen=256)
        self.events: list = []
        self.on_event: Callable | None = None

        self._commands: deque = deque()
        self._cmd_lock = threading.Lock()
        self._latest_ctrl: Pose6D | None = None
        self._last_perception = -np.inf
        self._force_perception = True  # perceive once at startup
        self.detection_log = list(detection_log) if detection_log is not None else None
        self._log_index = 0
        self._teach: TeachSession | None = None
        self._teach_object: str | None = None
        self._teach_result: dict | None = None
        self._pending_task: TaskDescription | None = None
        self._runner: _RunnerState | None = None
        self._pattern_playing: str | None = None
        self._pattern_started = 0.0
        self._pattern_scale = 1.0
        self._grip_pressure = 0.0
        self.last_twist = np.zeros(6)
        self.last_contacts: list = []
        self.haptic_frame = HapticFrame(intensities=dict.fromkeys(self.layout.ids, 0.0))
        self._recording: list | None = None

    # -- external command interface (thread-safe) --------------------------

    def submit(self, cmd) -> None:
        with self._cmd_lock:
            self._commands.append(cmd)

    def _emit(self, event: dict) -> None:
        event = {"t": self.world.time, **event}
        self.events.append(event)
        if self.on_event:
            self.on_event(event)

    def _diag(self, level: str, message: str, **extra) -> None:
        self.diagnostics.append({"level": level, "message": message, "t": self.world.time, **extra})
        self._emit({"event": "diagnostic", "level": level, "message": message, **extra})

    # -- command application -------------------------------------------------

    def _apply_commands(self) -> None:
        with self._cmd_lock:
            pending = list(self._commands)
            self._commands.clear()
        for cmd in pending:
            self._apply_command(cmd)

    def map_controller_pose(self, pose: Pose6D) -> Pose6D:
        """Registered-frame controller pose -> world, with calibration scale
        applied to translation only."""
        scaled = Pose6D(rotation=pose.rotation, translation=pose.translation * self.registration.scale)
        return self.registration.pose.compose(scaled)

    def _apply_command(self, cmd) -> None:
        if isinstance(cmd, CmdMux):
            self.set_mux(cmd.source)
        elif isinstance(cmd, CmdCtrlPose):
            if self.mux.active_source != TELEOP:
                return
            if cmd.pause:
                if self.teleop is not None:
                    self.teleop = controllers.teleop_deactivate(self.teleop)
                self._latest_ctrl = None
                self._emit({"event": "teleop_paused"})
                return
            world_pose = self.map_controller_pose(cmd.pose)
            if cmd.activate or self.teleop is None or not self.teleop.active:
                if cmd.activate:
                    self.teleop = teleop_activate(self.world.ee_pose(), world_pose)
                    self.pid = PidState.initial(self.pid.mode)  # integral reset on (re)activation
                    self._latest_ctrl = world_pose
                    self._emit({"event": "teleop_activated"})
                # Poses before activation are ignored (no-jump contract).
                return
            self._latest_ctrl = world_pose
        elif isinstance(cmd, CmdTeachStart):
            self._teach = TeachSession(target_class=cmd.target_class)
            self._teach_object = cmd.object_id
            self._teach_result = None
            self._emit({"event": "teach_started", "object": cmd.object_id})
        elif isinstance(cmd, CmdTeachCapture):
            self._capture_teach(cmd.phase)
        elif isinstance(cmd, CmdTaskSubmit):
            self._submit_task(cmd.doc)
        elif isinstance(cmd, CmdTaskControl):
            if cmd.action == "start":
                self._start_pending_task()
            elif cmd.action == "abort":
                self._runner = None
                self.set_mux(IDLE)
                self._emit({"event": "task_aborted"})
        elif isinstance(cmd, CmdRegisterPoints):
            try:
                self.registration = register_three_point(cmd.p0, cmd.p1, cmd.p2, cmd.reference_length)
                self._emit(
                    {
                        "event": "registered",
                        "pose": self.registration.pose.to_wire(),
                        "scale": self.registration.scale,
                    }
                )
            except Exception as exc:
                self._diag("error", f"registration failed: {exc}")
        elif isinstance(cmd, CmdClearScene):
            self.scene.clear()
        else:
            self._diag("error", f"unknown command {type(cmd).__name__}")

    def set_mux(self, source: str) -> None:
        prev = self.mux.active_source
        self.mux, self.pid, needs_activation = mux_switch(self.mux, source, self.pid)
        if prev != source:
            if needs_activation:
                self.teleop = None  # fresh activation handshake required
            if source != TELEOP:
                self._latest_ctrl = None
            self._emit({"event": "mux_switched", "source": source})

    def _capture_teach(self, phase: str) -> None:
        if self._teach is None or self._teach_object is None:
            self._diag("error", "teach capture without an active teach session")
            return
        try:
            obj = self.scene.query_object(self._teach_object, self.world.time)
        except ObjectNotFound as exc:
            self._diag("error", str(exc))
            return
        try:
            self._teach = capture_teach_point(self._teach, phase, self.world.ee_pose(), obj.pose_world)
        except ValueError as exc:
            self._diag("error", str(exc))
            return
        self._emit({"event": "teach_captured", "phase": phase})
        if self._teach.complete:
            session = self._teach
            if not session.target_class:
                session = TeachSession(
                    target_class=obj.class_id,
                    captured=session.captured,
                    gripper_width=session.gripper_width,
                    grip_pressure=session.grip_pressure,
                )
            self._teach_result = teach_session_to_primitive(session)
            self._emit({"event": "teach_complete", "primitive": self._teach_result})

    @property
    def teach_result(self) -> dict | None:
        return self._teach_result

    def _submit_task(self, doc: dict) -> None:
        try:
            task = taskflow.task_from_json_dict(doc)
        except TaskError as exc:
            self._diag("error", str(exc), diagnostics=[d.to_wire() for d in exc.diagnostics])
            return
        diags = validate_task(task, scene=self.scene, now=self.world.time)
        errors = [d for d in diags if d.level == taskflow.ERROR]
        self._emit({"event": "task_validated", "task": task.name, "diagnostics": [d.to_wire() for d in diags]})
        if errors:
            self._diag("error", f"task {task.name!r} rejected with {len(errors)} error(s)")
            return
        self._pending_task = task

    def _start_pending_task(self) -> None:
        if self._pending_task is None:
            self._diag("error", "no validated task pending")
            return
        self.set_mux(AUTONOMOUS)
        self._runner = _RunnerState(task=self._pending_task, started=self.world.time, step_started=self.world.time)
        self._emit({"event": "task_started", "task": self._pending_task.name})

    # -- one control tick ------------------------------------------------------

    def tick(self) -> None:
        now = self.world.time
        dt = self.dt
        self._apply_commands()

        # Perception path: detection-log replay, or synthetic in-hand camera
        # detections from the sim ground truth.
        if self.detection_log is not None:
            cam = self.world.camera_pose()
            while self._log_index < len(self.detection_log) and self.detection_log[self._log_index].timestamp <= now:
                stamp = self.detection_log[self._log_index].timestamp
                batch = []
                while (
                    self._log_index < len(self.detection_log)
                    and self.detection_log[self._log_index].timestamp == stamp
                ):
                    batch.append(self.detection_log[self._log_index])
                    self._log_index += 1
                self.scene.apply_detections(batch, cam, now=stamp)
            self._force_perception = False
        elif self._force_perception or (now - self._last_perception) >= self.perception_period:
            detections = self.world.detect(now)
            if detections:
                self.scene.apply_detections(detections, self.world.camera_pose(), now)
            self._last_perception = now
            self._force_perception = False

        x_c = None
        force_slow = False
        if self.mux.active_source == TELEOP:
            if self.teleop is not None and self.teleop.active and self._latest_ctrl is not None:
                x_c = teleop_target(self.teleop, self._latest_ctrl)
        elif self.mux.active_source == AUTONOMOUS and self._runner is not None:
            x_c, force_slow = self._advance_task(now, dt)

        ee = self.world.ee_pose()
        if x_c is not None:
            e = pose_error(x_c, ee)
            mode = controllers.SLOW if force_slow else select_mode(e, self.cfg.scheduler, self.pid.mode)
            if mode != self.pid.mode:
                self.pid = PidState.initial(mode)  # integral reset on mode switch
            twist, self.pid = controllers.pid_step(self.pid, e, dt, self.cfg.scheduler.gains(mode), self.cfg)
            dq = diff_ik(self.model, self.world.joints.positions, twist, self.q_sec).dq
            self.last_twist = twist.as_vector()
        else:
            dq = np.zeros(self.model.n)
            self.last_twist = np.zeros(6)

        self.world.step(dq, dt)

        self.last_contacts = self.world.synth_contacts()
        self._render_haptics()

        if self._recording is not None:
            self._recording.append(self.snapshot())
        self.tick_count += 1

    def _advance_task(self, now: float, dt: float):
        runner = self._runner
        if runner.done:
            return None, False
        task = runner.task
        if runner.step_index >= len(task.steps):
            runner.done = True
            self._emit({"event": "task_finished", "success": not runner.failed})
            return None, False
        spec = task.steps[runner.step_index]
        if runner.status is None:
            resolved_id = self._resolve_step_object(runner, spec)
            if spec.object_ref is not None and resolved_id is None:
                self._finish_step(runner, spec, FAILED, "object_not_found", now)
                return None, False
            if resolved_id is not None:
                spec = spec.resolve(resolved_id)
                task_steps = list(task.steps)
                task_steps[runner.step_index] = spec
                runner.task = TaskDescription(task.name, tuple(task_steps), task.object_bindings)
            runner.status = PrimitiveStatus.start(spec, now)
            runner.step_started = now
            self._emit({"event": "step_started", "step": spec.id, "kind": spec.kind})
        spec = runner.task.steps[runner.step_index]
        prev_phase = runner.status.phase
        status, command = step_primitive(
            spec,
            runner.status,
            self.scene,
            self.world.ee_pose(),
            now,
            dt,
            gripper=self.world.gripper,
            config=PrimitiveConfig(camera_offset=self.model.camera_frame),
        )
        status = self._apply_primitive_command(spec, status, command)
        runner.status = status
        if status.phase != prev_phase and status.outcome == RUNNING:
            self._emit({"event": "phase_changed", "step": spec.id, "phase": status.phase})
        if status.outcome == SUCCEEDED:
            self._finish_step(runner, spec, SUCCEEDED, None, now)
            return None, False
        if status.outcome == FAILED:
            self._finish_step(runner, spec, FAILED, status.failure_reason, now)
            return None, False
        return command.target, command.force_slow

    def _resolve_step_object(self, runner: _RunnerState, spec) -> str | None:
        if spec.object_ref is None:
            return None
        if spec.object_ref not in runner.resolved:
            runner.resolved.update(resolve_bindings(runner.task, self.scene, self.world.time))
        return runner.resolved.get(spec.object_ref)

    def _apply_primitive_command(self, spec, status: PrimitiveStatus, command: PrimitiveCommand) -> PrimitiveStatus:
        if command.request_perception:
            self._force_perception = True
        if command.gripper == "close" and self.world.gripper.attached_object is None:
            try:
                self.world.gripper.width = command.gripper_width
                self._grip_pressure = command.grip_pressure
                self.world.attach(spec.resolved_object)
                self._play_pattern("grasp_confirm", scale=max(command.grip_pressure, 0.2))
                self._emit({"event": "attached", "object": spec.resolved_object})
            except (GraspError, ObjectNotFound) as exc:
                return status.fail(f"missed_grasp: {exc}")
        elif command.gripper == "open" and self.world.gripper.attached_object is not None:
            released = self.world.gripper.attached_object
            self.world.detach()
            self._grip_pressure = 0.0
            self._play_pattern("release_confirm")
            self._emit({"event": "detached", "object": released})
        return status

    def _finish_step(self, runner: _RunnerState, spec, outcome: str, reason: str | None, now: float) -> None:
        runner.outcomes.append(
            StepOutcome(
                step_id=spec.id,
                kind=spec.kind,
                outcome=outcome,
                duration=now - runner.step_started,
                failure_reason=reason,
            )
        )
        self._emit({"event": "step_finished", "step": spec.id, "outcome": outcome, "reason": reason})
        runner.status = None
        if outcome == FAILED:
            runner.failed = True
            runner.done = True  # first-failure abort
            self._emit({"event": "task_finished", "success": False})
        else:
            runner.step_index += 1
            if runner.step_index >= len(runner.task.steps):
                runner.done = True
                self._emit({"event": "task_finished", "success": True})

    def _play_pattern(self, name: str, scale: float = 1.0) -> None:
        self._pattern_playing = name
        self._pattern_started = self.world.time
        self._pattern_scale = scale

    def _render_haptics(self) -> None:
        force = np.zeros(3)
        for contact in self.last_contacts:
            force += contact.force
        # Hand frame = registered controller frame (identity by default).
        force_hand = quat_rotate(self.registration.pose.inverse().rotation, force)
        frame = render_force_cue(self.layout, force_hand, timestamp=self.world.time)
        if self._pattern_playing is not None:
            pframe = self.patterns.play(self._pattern_playing, self.world.time - self._pattern_started)
            if all(v == 0.0 for v in pframe.intensities.values()) and (
                self.world.time - self._pattern_started
            ) > self.patterns.get(self._pattern_playing).duration:
                self._pattern_playing = None
            else:
                merged = {
                    aid: max(frame.intensities.get(aid, 0.0), self._pattern_scale * pframe.intensities.get(aid, 0.0))
                    for aid in frame.intensities
                }
                frame = HapticFrame(intensities=merged, timestamp=self.world.time)
        self.haptic_frame = frame

    # -- headless task execution ------------------------------------------------

    def run_task(self, task: TaskDescription, max_duration: float = 120.0) -> TaskResult:
        """Execute a validated task to completion in virtual time."""
        diags = validate_task(task, scene=self.scene, now=self.world.time)
        errors = [d for d in diags if d.level == taskflow.ERROR]
        if errors:
            raise TaskError("task has validation errors; refusing to run", diags)
        self.set_mux(AUTONOMOUS)
        self._runner = _RunnerState(task=task, started=self.world.time, step_started=self.world.time)
        self._emit({"event": "task_started", "task": task.name})
        start = self.world.time
        while not self._runner.done:
            if self.world.time - start > max_duration:
                spec = task.steps[self._runner.step_index] if self._runner.step_index < len(task.steps) else None
                if spec is not None:
                    self._finish_step(self._runner, spec, FAILED, "task_duration_exceeded", self.world.time)
                break
            self.tick()
        runner = self._runner
        result = TaskResult(
            task_name=task.name,
            success=not runner.failed and runner.step_index >= len(task.steps),
            step_outcomes=tuple(runner.outcomes),
            duration=self.world.time - start,
        )
        self._runner = None
        self.set_mux(IDLE)
        return result

    # -- snapshots & recording -----------------------------------------------------

    def snapshot(self) -> dict:
        frames = forward_kinematics(self.model, self.world.joints.positions)
        task_state = None
        if self._runner is not None:
            runner = self._runner
            step_id = None
            phase = None
            if runner.step_index < len(runner.task.steps):
                step_id = runner.task.steps[runner.step_index].id
                phase = runner.status.phase if runner.status else None
            task_state = {
                "name": runner.task.name,
                "step_index": runner.step_index,
                "step": step_id,
                "phase": phase,
                "done": runner.done,
                "failed": runner.failed,
            }
        return {
            "t": self.world.time,
            "tick": self.tick_count,
            "q": [float(v) for v in self.world.joints.positions],
            "dq": [float(v) for v in self.world.joints.velocities],
            "frames": {name: pose.to_wire() for name, pose in frames.items()},
            "objects": [
                {
                    "id": o.object_id,
                    "class": o.class_id,
                    "pose": o.pose_world.to_wire(),
                    "status": o.status,
                    "last_seen": o.last_seen,
                    "attached": self.world.gripper.attached_object == o.object_id,
                }
                for o in self.scene.all_objects(self.world.time)
            ],
            "mux": self.mux.active_source,
            "controller_mode": self.pid.mode,
            "teleop_active": bool(self.teleop and self.teleop.active),
            "gripper": {"width": self.world.gripper.width, "attached": self.world.gripper.attached_object},
            "twist": [float(v) for v in self.last_twist],
            "contacts": [
                {"object_id": c.object_id, "force": [float(v) for v in c.force]} for c in self.last_contacts
            ],
            "haptic": self.haptic_frame.to_wire(),
            "task": task_state,
        }

    def start_recording(self) -> None:
        self._recording = []

    def stop_recording(self) -> list:
        rec, self._recording = self._recording, None
        return rec or []

    def record_header(self, task_doc: dict | None = None, world_doc: dict | None = None) -> dict:
        header = {
            "record_version": RECORD_VERSION,
            "dt": self.dt,
            "model": self.model.to_json_dict(),
            "controller": self.cfg.to_json_dict(),
            "perception_period": self.perception_period,
            "visibility_timeout": self.scene.visibility_timeout,
            "q0": [float(v) for v in self._q0atstart],
            "task": task_doc,
            "world": world_doc,
        }
        if self.detection_log is not None:
            header["detections"] = [json.loads(d.to_jsonl_line()) for d in self.detection_log]
        return header


def write_record(path, header: dict, snapshots: list) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for snap in snapshots:
            fh.write(json.dumps(snap) + "\n")


def read_record(path):
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or "record_version" not in lines[0]:
        raise ValueError("not a cobotkit record file (missing header)")
    return lines[0], lines[1:]
