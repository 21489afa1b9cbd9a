"""Command-line interface: validate, run, serve, replay, schemas, demo."""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

from .controllers import ControllerConfig
from .engine import Engine, read_record, write_record
from .errors import TaskError
from .primitives import parameter_schemas
from .scene import load_detection_log
from .sim import load_world_file
from .taskflow import ERROR, load_task, validate_primitive_json, validate_task


def _demo_path(name: str):
    base = resources.files("cobotkit").joinpath("demos", name)
    if not base.is_dir():
        raise SystemExit(f"unknown demo {name!r}")
    return base


def _build_engine(args):
    """Engine plus the raw world document (kept for record headers)."""
    cfg = ControllerConfig()
    if getattr(args, "controller", None):
        with open(args.controller) as fh:
            cfg = ControllerConfig.from_json_dict(json.load(fh))
    dt = 1.0 / args.rate if getattr(args, "rate", None) else None
    objects = None
    detection_log = None
    world_doc = None
    scene_path = getattr(args, "scene", None)
    if scene_path:
        if str(scene_path).endswith(".jsonl"):
            detection_log = load_detection_log(scene_path)
        else:
            objects = load_world_file(scene_path)
            with open(scene_path) as fh:
                world_doc = json.load(fh)
    engine = Engine(
        objects=objects,
        controller_config=cfg,
        detection_log=detection_log,
        **({"dt": dt} if dt else {}),
    )
    return engine, world_doc


def cmd_validate(args) -> int:
    with open(args.file) as fh:
        text = fh.read()
    doc = json.loads(text)
    if "steps" in doc or "bindings" in doc:
        try:
            task = load_task(args.file)
        except TaskError as exc:
            for d in exc.diagnostics:
                print(d)
            print(f"FAIL: {exc}")
            return 1
        diags = validate_task(task)
    else:
        diags = validate_primitive_json(doc)
    for d in diags:
        print(d)
    errors = [d for d in diags if d.level == ERROR]
    if errors:
        print(f"FAIL: {len(errors)} error(s)")
        return 1
    print("OK: 0 errors" + (f", {len(diags)} warning(s)" if diags else ""))
    return 0


def _run_task_file(task_path, args) -> int:
    task = load_task(task_path)
    engine, world_doc = _build_engine(args)
    if args.record:
        engine.start_recording()
    result = engine.run_task(task, max_duration=args.max_duration)
    for step in result.step_outcomes:
        reason = f" ({step.failure_reason})" if step.failure_reason else ""
        print(f"  step {step.step_id} [{step.kind}]: {step.outcome}{reason} in {step.duration:.2f}s")
    print(f"task {result.task_name!r}: {'SUCCESS' if result.success else 'FAILED'} in {result.duration:.2f}s simulated")
    if args.record:
        snapshots = engine.stop_recording()
        header = engine.record_header(task_doc=task.to_json_dict(), world_doc=world_doc)
        write_record(args.record, header, snapshots)
        print(f"recorded {len(snapshots)} ticks to {args.record}")
    return 0 if result.success else 1


def cmd_run(args) -> int:
    return _run_task_file(args.task, args)


def cmd_demo(args) -> int:
    base = _demo_path(args.name)
    args.scene = str(base.joinpath("world.json"))
    return _run_task_file(str(base.joinpath("task.json")), args)


def cmd_serve(args) -> int:
    from .gateway import serve

    engine, _ = _build_engine(args)
    server = serve(engine, port=args.port, snapshot_hz=args.snapshot_hz, ws_port=args.ws_port)
    print(f"gateway listening on tcp://{server.host}:{server.port}", flush=True)
    if server.ws_port is not None:
        print(f"websocket on ws://{server.host}:{server.ws_port}", flush=True)
    try:
        while True:
            import time

            time.sleep(0.5)
    except KeyboardInterrupt:
        server.stop()
    return 0


def cmd_replay(args) -> int:
    header, snapshots = read_record(args.record)
    print(f"record: {len(snapshots)} ticks at dt={header['dt']}s")
    if snapshots:
        last = snapshots[-1]
        print(f"final t={last['t']:.3f}s q={['%.4f' % v for v in last['q']]}")
        for obj in last.get("objects", []):
            xyz = obj["pose"]["xyz"]
            print(f"  object {obj['id']} [{obj['class']}] at ({xyz[0]:.4f}, {xyz[1]:.4f}, {xyz[2]:.4f}) {obj['status']}")
    if not args.verify:
        return 0
    if not header.get("task"):
        print("verify: record has no embedded task; nothing to re-run")
        return 1
    from .robot import RobotModel
    from .scene import Detection
    from .sim import load_world_objects
    from .taskflow import task_from_json_dict

    model = RobotModel.from_json_dict(header["model"])
    objects = load_world_objects(header["world"]) if header.get("world") else None
    detection_log = None
    if header.get("detections") is not None:
        detection_log = [Detection.from_jsonl_line(json.dumps(d)) for d in header["detections"]]
    engine = Engine(
        model=model,
        objects=objects,
        q0=header["q0"],
        controller_config=ControllerConfig.from_json_dict(header["controller"]),
        dt=header["dt"],
        perception_period=header.get("perception_period", 0.1),
        visibility_timeout=header.get("visibility_timeout", 1.0),
        detection_log=detection_log,
    )
    engine.start_recording()
    engine.run_task(task_from_json_dict(header["task"]))
    replayed = engine.stop_recording()
    if len(replayed) != len(snapshots):
        print(f"verify: tick count mismatch ({len(replayed)} vs {len(snapshots)})")
        return 1
    for i, (a, b) in enumerate(zip(snapshots, replayed)):
        if json.dumps(a, sort_keys=True) != json.dumps(b, sort_keys=True):
            print(f"verify: divergence at tick {i}")
            return 1
    print(f"verify: OK, {len(snapshots)} ticks bit-identical")
    return 0


def cmd_schemas(args) -> int:
    print(json.dumps(parameter_schemas(), indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cobotkit", description="Cobot programming-by-demonstration engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a task or primitive JSON document")
    p.add_argument("file")
    p.set_defaults(fn=cmd_validate)

    def add_run_opts(p):
        p.add_argument("--scene", help="world scene JSON or detection replay JSONL")
        p.add_argument("--rate", type=float, help="control rate in Hz (default 250)")
        p.add_argument("--record", help="write per-tick snapshots to this JSONL file")
        p.add_argument("--controller", help="controller config JSON")
        p.add_argument("--max-duration", type=float, default=120.0, help="simulated-time budget (s)")

    p = sub.add_parser("run", help="run a task headlessly in the simulator")
    p.add_argument("task")
    add_run_opts(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("demo", help="run a packaged demo task")
    p.add_argument("name", nargs="?", default="tray_stack")
    add_run_opts(p)
    p.set_defaults(fn=cmd_demo)

    p = sub.add_parser("serve", help="serve the engine to UI clients")
    p.add_argument("--port", type=int, default=8571)
    p.add_argument("--ws-port", type=int, default=None, help="also serve WebSocket clients on this port (0 = auto)")
    p.add_argument("--snapshot-hz", type=float, default=60.0)
    p.add_argument("--scene", help="world scene JSON")
    p.add_argument("--rate", type=float, help="control rate in Hz (default 250)")
    p.add_argument("--controller", help="controller config JSON")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("replay", help="inspect (and optionally verify) a recording")
    p.add_argument("record")
    p.add_argument("--verify", action="store_true", help="re-run the embedded task and compare tick-by-tick")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("schemas", help="print the primitive parameter JSON schemas")
    p.set_defaults(fn=cmd_schemas)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
