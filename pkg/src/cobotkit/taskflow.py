"""Task descriptions, validation, teach-mode capture, and the control
multiplexer.

Task document schema (versioned)::

    { "schema_version": 1,
      "name": "stack",
      "bindings": {"trayA": {"class": "tray"}, "fix": {"id": "fixture_3"}},
      "steps": [{"id": "s1", "kind": "perceive", "params": {}},
                {"id": "s2", "kind": "grasp", "object": "trayA", "params": {...}}] }

Validation returns diagnostics (errors and warnings) instead of raising, so
UIs can show everything at once; run_task refuses tasks with error
diagnostics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import jsonschema

from .controllers import PidState
from .errors import TaskError
from .geometry import Pose6D
from .primitives import (
    GRASP,
    KINDS,
    PERCEIVE,
    GraspParams,
    PrimitiveSpec,
    parameter_schemas,
    params_from_json,
    params_to_json,
)
from .scene import SceneMemory

SCHEMA_VERSION = 1

ERROR = "error"
WARNING = "warning"

IDLE = "idle"
TELEOP = "teleop"
AUTONOMOUS = "autonomous"
SOURCES = (IDLE, TELEOP, AUTONOMOUS)


@dataclass(frozen=True)
class Diagnostic:
    level: str
    message: str
    step_id: str | None = None
    field: str | None = None

    def to_wire(self) -> dict:
        return {"level": self.level, "message": self.message, "step": self.step_id, "field": self.field}

    def __str__(self):
        loc = f" [step {self.step_id}]" if self.step_id else ""
        return f"{self.level}{loc}: {self.message}"


@dataclass(frozen=True)
class TaskDescription:
    name: str
    steps: tuple
    object_bindings: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "bindings": dict(self.object_bindings),
            "steps": [
                {
                    "id": s.id,
                    "kind": s.kind,
                    **({"object": s.object_ref} if s.object_ref else {}),
                    "params": params_to_json(s.kind, s.params),
                }
                for s in self.steps
            ],
        }


def parse_task(text: str) -> TaskDescription:
    """Parse a task JSON document; raises TaskError with diagnostics."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TaskError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            [Diagnostic(ERROR, f"line {exc.lineno}: {exc.msg}")],
        ) from exc
    return task_from_json_dict(doc)


def task_from_json_dict(doc: dict) -> TaskDescription:
    diags = []
    if not isinstance(doc, dict):
        raise TaskError("task document must be a JSON object", [Diagnostic(ERROR, "not an object")])
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        diags.append(Diagnostic(ERROR, f"unsupported schema_version {version}", field="schema_version"))
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        diags.append(Diagnostic(ERROR, "task needs a non-empty string 'name'", field="name"))
        name = "<unnamed>"
    bindings = doc.get("bindings", {})
    if not isinstance(bindings, dict):
        diags.append(Diagnostic(ERROR, "'bindings' must be an object", field="bindings"))
        bindings = {}
    for logical, binding in bindings.items():
        if not isinstance(binding, dict) or ("id" in binding) == ("class" in binding):
            diags.append(
                Diagnostic(ERROR, f"binding {logical!r} needs exactly one of 'id' or 'class'", field="bindings")
            )

    steps = []
    seen_ids = set()
    raw_steps = doc.get("steps")
    if not isinstance(raw_steps, list):
        diags.append(Diagnostic(ERROR, "'steps' must be an array", field="steps"))
        raw_steps = []
    for i, raw in enumerate(raw_steps):
        sid = raw.get("id", f"step{i}") if isinstance(raw, dict) else f"step{i}"
        if not isinstance(raw, dict):
            diags.append(Diagnostic(ERROR, f"step {i} is not an object", step_id=sid))
            continue
        if sid in seen_ids:
            diags.append(Diagnostic(ERROR, f"duplicate step id {sid!r}", step_id=sid, field="id"))
        seen_ids.add(sid)
        kind = raw.get("kind")
        if kind not in KINDS:
            diags.append(
                Diagnostic(ERROR, f"unknown primitive kind {kind!r} (expected one of {', '.join(KINDS)})", step_id=sid, field="kind")
            )
            continue
        try:
            params = params_from_json(kind, raw.get("params", {}))
        except (ValueError, KeyError, TypeError) as exc:
            diags.append(Diagnostic(ERROR, f"bad params: {exc}", step_id=sid, field="params"))
            continue
        steps.append(PrimitiveSpec(kind=kind, params=params, id=sid, object_ref=raw.get("object")))

    if any(d.level == ERROR for d in diags):
        raise TaskError("task document failed to parse", diags)
    return TaskDescription(name=name, steps=tuple(steps), object_bindings=dict(bindings))


def load_task(path) -> TaskDescription:
    with open(path) as fh:
        return parse_task(fh.read())


def validate_task(task: TaskDescription, schemas: dict | None = None, scene: SceneMemory | None = None, now: float = 0.0) -> list:
    """Structural and binding diagnostics; empty list means runnable.

    With a scene provided, id bindings must resolve and class bindings must
    match at least one object. Steps that act on objects before any perceive
    step earn a warning.
    """
    schemas = schemas or parameter_schemas()
    diags = []
    needs_object = []
    perceived_yet = False
    for step in task.steps:
        schema = schemas.get(step.kind)
        if schema is not None:
            doc = params_to_json(step.kind, step.params)
            try:
                jsonschema.validate(doc, schema)
            except jsonschema.ValidationError as exc:
                diags.append(Diagnostic(ERROR, f"params violate schema: {exc.message}", step_id=step.id, field="params"))
        references_object = step.object_ref is not None or (
            step.kind in (GRASP,) or getattr(step.params, "offset", None) is not None
        )
        if step.kind == GRASP and step.object_ref is None:
            diags.append(Diagnostic(ERROR, "grasp step needs an 'object' reference", step_id=step.id, field="object"))
        if step.object_ref is not None and step.object_ref not in task.object_bindings:
            diags.append(
                Diagnostic(ERROR, f"object {step.object_ref!r} is not bound in 'bindings'", step_id=step.id, field="object")
            )
        if step.kind == PERCEIVE:
            perceived_yet = True
        elif references_object and step.object_ref is not None and not perceived_yet:
            needs_object.append(step)
    for step in needs_object:
        diags.append(
            Diagnostic(
                WARNING,
                f"step acts on object {step.object_ref!r} before any perceive step",
                step_id=step.id,
            )
        )
    if scene is not None:
        # A perceive step before a binding's first use means the object may
        # legitimately appear later: unresolvable then is a warning, not an
        # error.
        first_perceive = next((i for i, s in enumerate(task.steps) if s.kind == PERCEIVE), None)
        for logical, binding in task.object_bindings.items():
            first_use = next((i for i, s in enumerate(task.steps) if s.object_ref == logical), None)
            may_appear = first_perceive is not None and (first_use is None or first_perceive < first_use)
            if "id" in binding and binding["id"] not in scene:
                level = WARNING if may_appear else ERROR
                diags.append(Diagnostic(level, f"binding {logical!r}: no object with id {binding['id']!r} in scene"))
            elif "class" in binding and not scene.query_by_class(binding["class"], now):
                diags.append(Diagnostic(WARNING, f"binding {logical!r}: no object of class {binding['class']!r} seen yet"))
    return diags


def resolve_bindings(task: TaskDescription, scene: SceneMemory, now: float) -> dict:
    """Map logical names to concrete object ids.

    Id bindings resolve directly. Class bindings are assigned deterministically:
    logical names in declaration order take matching objects in sorted-id
    order, never reusing an id.
    """
    resolved = {}
    taken = set()
    for logical, binding in task.object_bindings.items():
        if "id" in binding:
            resolved[logical] = binding["id"]
            taken.add(binding["id"])
    for logical, binding in task.object_bindings.items():
        if "class" in binding:
            candidates = sorted(
                o.object_id for o in scene.query_by_class(binding["class"], now) if o.object_id not in taken
            )
            if candidates:
                resolved[logical] = candidates[0]
                taken.add(candidates[0])
    return resolved


@dataclass(frozen=True)
class StepOutcome:
    step_id: str
    kind: str
    outcome: str
    duration: float
    failure_reason: str | None = None

    def to_wire(self) -> dict:
        return {
            "step": self.step_id,
            "kind": self.kind,
            "outcome": self.outcome,
            "duration": self.duration,
            "reason": self.failure_reason,
        }


@dataclass(frozen=True)
class TaskResult:
    task_name: str
    success: bool
    step_outcomes: tuple
    duration: float

    def to_wire(self) -> dict:
        return {
            "task": self.task_name,
            "success": self.success,
            "steps": [s.to_wire() for s in self.step_outcomes],
            "duration": self.duration,
        }


# -- control multiplexer -----------------------------------------------------


@dataclass(frozen=True)
class MuxState:
    active_source: str = IDLE

    def __post_init__(self):
        if self.active_source not in SOURCES:
            raise ValueError(f"unknown source {self.active_source!r}")


def mux_switch(state: MuxState, request: str, pid: PidState):
    """Switch the command source; controller memory resets on every change.

    Returns (MuxState, PidState, teleop_needs_activation). Switching into
    teleop never moves the arm by itself: a fresh activation handshake is
    required before targets resume.
    """
    if request not in SOURCES:
        raise ValueError(f"unknown source {request!r}")
    if request == state.active_source:
        return state, pid, False
    return MuxState(active_source=request), pid.reset(), request == TELEOP


# -- teach capture ------------------------------------------------------------

TEACH_PHASES = ("pre", "grasp", "post")


@dataclass(frozen=True)
class TeachSession:
    target_class: str
    captured: dict = field(default_factory=dict)  # phase -> object-frame ee pose
    gripper_width: float = 0.0
    grip_pressure: float = 0.5

    @property
    def phase_pending(self) -> str | None:
        for phase in TEACH_PHASES:
            if phase not in self.captured:
                return phase
        return None

    @property
    def complete(self) -> bool:
        return self.phase_pending is None


def capture_teach_point(session: TeachSession, phase: str, ee_pose: Pose6D, object_pose: Pose6D) -> TeachSession:
    """Record the ee pose relative to the object for one grasp phase."""
    if phase not in TEACH_PHASES:
        raise ValueError(f"unknown teach phase {phase!r} (expected one of {TEACH_PHASES})")
    offset = object_pose.inverse().compose(ee_pose)
    captured = dict(session.captured)
    captured[phase] = offset
    return replace(session, captured=captured)


def teach_session_to_primitive(session: TeachSession, step_id: str = "taught_grasp") -> dict:
    """Emit the schema-valid grasp primitive JSON for a completed session."""
    if not session.complete:
        missing = [p for p in TEACH_PHASES if p not in session.captured]
        raise TaskError(f"teach session incomplete; missing phases: {', '.join(missing)}")
    params = GraspParams(
        pre_grasp=session.captured["pre"],
        grasp=session.captured["grasp"],
        post_grasp=session.captured["post"],
        object_class=session.target_class,
        gripper_width=session.gripper_width,
        grip_pressure=session.grip_pressure,
    )
    return {"id": step_id, "kind": GRASP, "params": params_to_json(GRASP, params)}


def validate_primitive_json(doc: dict) -> list:
    """Diagnostics for a standalone primitive spec document."""
    diags = []
    kind = doc.get("kind")
    if kind not in KINDS:
        return [Diagnostic(ERROR, f"unknown primitive kind {kind!r}", field="kind")]
    schema = parameter_schemas()[kind]
    try:
        jsonschema.validate(doc.get("params", {}), schema)
    except jsonschema.ValidationError as exc:
        diags.append(Diagnostic(ERROR, f"params violate schema: {exc.message}", field="params"))
    return diags
