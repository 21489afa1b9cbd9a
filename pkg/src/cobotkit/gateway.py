"""Wire protocol and service endpoint for UIs and remote clients.

Frames are newline-delimited UTF-8 JSON objects: {"type", "seq", "payload"}.
The same frames travel over a raw TCP stream socket and, for browsers, over
a WebSocket (one frame per WS text message). Content errors never kill a
connection: malformed lines come back as diagnostics messages and the
stream continues.

Exactly one client at a time may hold the teleop token (claimed by a
mode_switch to "teleop"); everyone else is read-only. If the token holder
disconnects the engine is switched to idle within one tick: a safety stop.
"""

from __future__ import annotations

import json
import socket
import threading
import time
from dataclasses import dataclass, field

from .engine import (
    CmdCtrlPose,
    CmdMux,
    CmdRegisterPoints,
    CmdTaskControl,
    CmdTaskSubmit,
    CmdTeachCapture,
    CmdTeachStart,
    Engine,
)
from .geometry import Pose6D
from .taskflow import IDLE, TELEOP

MSG_TYPES = (
    "ctrl_pose",
    "mode_switch",
    "teach_capture",
    "task_submit",
    "task_control",
    "state_snapshot",
    "haptic_frame",
    "diagnostics",
    "register_points",
)


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class Message:
    type: str
    payload: dict = field(default_factory=dict)
    seq: int = 0

    def __post_init__(self):
        if self.type not in MSG_TYPES:
            raise ProtocolError(f"unknown message type {self.type!r}")
        if not isinstance(self.seq, int) or self.seq < 0:
            raise ProtocolError("seq must be a non-negative integer")
        if not isinstance(self.payload, dict):
            raise ProtocolError("payload must be an object")


def encode(msg: Message) -> bytes:
    """One message per line, UTF-8 JSON, newline-delimited."""
    return (json.dumps({"type": msg.type, "seq": msg.seq, "payload": msg.payload}) + "\n").encode("utf-8")


def decode(data) -> Message:
    """Inverse of encode for one line; raises ProtocolError on bad content."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"invalid UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ProtocolError("frame must be a JSON object")
    if "type" not in doc:
        raise ProtocolError("frame missing 'type'")
    return Message(type=doc["type"], seq=doc.get("seq", 0), payload=doc.get("payload", {}))


def diagnostics_message(level: str, text: str, seq: int = 0, **extra) -> Message:
    return Message(type="diagnostics", seq=seq, payload={"level": level, "message": text, **extra})


# -- server -------------------------------------------------------------------


class _Client:
    """Transport-agnostic session: TCP sockets and WebSockets share this."""

    _ids = 0

    def __init__(self, server: "GatewayServer", send_fn, label: str):
        _Client._ids += 1
        self.id = _Client._ids
        self.server = server
        self._send_fn = send_fn
        self.label = label
        self.last_seq: int | None = None
        self.out_seq = 0
        self.lock = threading.Lock()
        self.alive = True

    def send(self, msg: Message) -> None:
        with self.lock:
            if not self.alive:
                return
            self.out_seq += 1
            try:
                self._send_fn(encode(Message(msg.type, msg.payload, self.out_seq)))
            except Exception:
                self.alive = False

    def handle_line(self, line) -> None:
        try:
            msg = decode(line)
        except ProtocolError as exc:
            self.send(diagnostics_message("error", f"decode error: {exc}"))
            return
        if self.last_seq is not None and msg.seq > 0 and msg.seq > self.last_seq + 1:
            self.send(
                diagnostics_message(
                    "warning",
                    f"sequence gap: expected {self.last_seq + 1}, got {msg.seq}",
                    code="seq_gap",
                )
            )
        if msg.seq > 0:
            self.last_seq = msg.seq
        try:
            self.server.handle_message(self, msg)
        except Exception as exc:  # content errors must never kill the stream
            self.send(diagnostics_message("error", f"{type(exc).__name__}: {exc}"))


class GatewayServer:
    """Serves one engine to many clients over TCP and (optionally) WebSocket."""

    def __init__(
        self,
        engine: Engine,
        port: int = 8571,
        host: str = "127.0.0.1",
        snapshot_hz: float = 60.0,
        ws_port: int | None = None,
        realtime: bool = True,
    ):
        self.engine = engine
        self.host = host
        self.port = port
        self.ws_port = ws_port
        self.snapshot_hz = snapshot_hz
        self.realtime = realtime
        self._clients: list[_Client] = []
        self._clients_lock = threading.Lock()
        self._token_holder: _Client | None = None
        self._token_lock = threading.Lock()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._sock: socket.socket | None = None
        self._ws_server = None
        engine.on_event = self._on_engine_event

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self._sock = socket.create_server((self.host, self.port))
        self._sock.settimeout(0.2)
        self.port = self._sock.getsockname()[1]
        self._spawn(self._accept_loop, "gateway-accept")
        self._spawn(self._broadcast_loop, "gateway-broadcast")
        if self.realtime:
            self._spawn(self._tick_loop, "engine-tick")
        if self.ws_port is not None:
            self._start_ws()

    def stop(self) -> None:
        self._stop.set()
        if self._ws_server is not None:
            self._ws_server.shutdown()
        for t in self._threads:
            t.join(timeout=2.0)
        if self._sock is not None:
            self._sock.close()

    def _spawn(self, fn, name: str) -> None:
        t = threading.Thread(target=fn, name=name, daemon=True)
        t.start()
        self._threads.append(t)

    # -- engine loop ---------------------------------------------------------

    def _tick_loop(self) -> None:
        period = self.engine.dt
        next_t = time.monotonic()
        while not self._stop.is_set():
            self.engine.tick()
            next_t += period
            delay = next_t - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_t = time.monotonic()  # fell behind; drop the backlog

    # -- TCP ---------------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, addr = self._sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            client = _Client(self, conn.sendall, f"tcp:{addr[0]}:{addr[1]}")
            self._register(client)
            self._spawn(lambda c=conn, cl=client: self._reader_loop(c, cl), f"gateway-client-{client.id}")

    def _reader_loop(self, conn: socket.socket, client: _Client) -> None:
        buf = b""
        conn.settimeout(0.2)
        try:
            while not self._stop.is_set() and client.alive:
                try:
                    chunk = conn.recv(65536)
                except socket.timeout:
                    continue
                except OSError:
                    break
                if not chunk:
                    break
                buf += chunk
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    if line.strip():
                        client.handle_line(line)
        finally:
            conn.close()
            self._unregister(client)

    # -- WebSocket -----------------------------------------------------------

    def _start_ws(self) -> None:
        from websockets.sync.server import serve as ws_serve

        def handler(ws):
            client = _Client(self, lambda data: ws.send(data.decode("utf-8").rstrip("\n")), "ws")
            self._register(client)
            try:
                for raw in ws:
                    if isinstance(raw, str) and raw.strip():
                        client.handle_line(raw)
            except Exception:
                pass
            finally:
                self._unregister(client)

        self._ws_server = ws_serve(handler, self.host, self.ws_port)
        self.ws_port = self._ws_server.socket.getsockname()[1]
        self._spawn(self._ws_server.serve_forever, "gateway-ws")

    # -- client registry -------------------------------------------------------

    def _register(self, client: _Client) -> None:
        with self._clients_lock:
            self._clients.append(client)
        client.send(
            diagnostics_message(
                "info",
                "connected",
                code="hello",
                snapshot_hz=self.snapshot_hz,
                tick_dt=self.engine.dt,
            )
        )

    def _unregister(self, client: _Client) -> None:
        client.alive = False
        with self._clients_lock:
            if client in self._clients:
                self._clients.remove(client)
        with self._token_lock:
            if self._token_holder is client:
                # Safety stop: the teleoperator vanished.
                self._token_holder = None
                self.engine.submit(CmdMux(IDLE))

    @property
    def client_count(self) -> int:
        with self._clients_lock:
            return len(self._clients)

    # -- message handling ---------------------------------------------------------

    def handle_message(self, client: _Client, msg: Message) -> None:
        if msg.type == "ctrl_pose":
            self._handle_ctrl_pose(client, msg)
        elif msg.type == "mode_switch":
            self._handle_mode_switch(client, msg)
        elif msg.type == "teach_capture":
            payload = msg.payload
            if payload.get("action") == "start":
                self.engine.submit(
                    CmdTeachStart(object_id=payload["object_id"], target_class=payload.get("class", ""))
                )
            else:
                self.engine.submit(CmdTeachCapture(phase=payload["phase"]))
        elif msg.type == "task_submit":
            self.engine.submit(CmdTaskSubmit(doc=msg.payload.get("task", {})))
        elif msg.type == "task_control":
            self.engine.submit(CmdTaskControl(action=msg.payload.get("action", "")))
        elif msg.type == "register_points":
            pts = msg.payload["points"]
            self.engine.submit(
                CmdRegisterPoints(
                    p0=tuple(pts[0]),
                    p1=tuple(pts[1]),
                    p2=tuple(pts[2]),
                    reference_length=msg.payload.get("reference_length"),
                )
            )
        elif msg.type in ("state_snapshot", "haptic_frame", "diagnostics"):
            client.send(diagnostics_message("warning", f"{msg.type} is server-to-client only"))
        else:  # pragma: no cover - decode() already rejects unknown types
            client.send(diagnostics_message("error", f"unhandled type {msg.type!r}"))

    def _handle_ctrl_pose(self, client: _Client, msg: Message) -> None:
        with self._token_lock:
            holder = self._token_holder
        if holder is not client:
            client.send(diagnostics_message("warning", "ctrl_pose ignored: teleop token not held", code="no_token"))
            return
        payload = msg.payload
        if payload.get("pause"):
            self.engine.submit(CmdCtrlPose(pose=Pose6D.identity(), seq=msg.seq, pause=True))
            return
        pose = Pose6D.from_wire(payload["pose"])
        self.engine.submit(CmdCtrlPose(pose=pose, seq=msg.seq, activate=bool(payload.get("activate"))))

    def _handle_mode_switch(self, client: _Client, msg: Message) -> None:
        source = msg.payload.get("source")
        if source == TELEOP:
            with self._token_lock:
                if self._token_holder is not None and self._token_holder is not client:
                    client.send(
                        diagnostics_message("error", "teleop token already held by another client", code="token_denied")
                    )
                    return
                self._token_holder = client
            client.send(diagnostics_message("info", "teleop token granted", code="token_granted"))
        else:
            with self._token_lock:
                if self._token_holder is client:
                    self._token_holder = None
        self.engine.submit(CmdMux(source=source))

    # -- broadcast ------------------------------------------------------------

    def _broadcast_loop(self) -> None:
        period = 1.0 / self.snapshot_hz
        while not self._stop.is_set():
            start = time.monotonic()
            snap = self.engine.snapshot()
            haptic = snap.pop("haptic")
            self._broadcast(Message("state_snapshot", snap))
            self._broadcast(Message("haptic_frame", haptic))
            delay = period - (time.monotonic() - start)
            if delay > 0:
                time.sleep(delay)

    def _broadcast(self, msg: Message) -> None:
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            client.send(msg)

    def _on_engine_event(self, event: dict) -> None:
        name = event.get("event")
        if name in ("teach_captured", "teach_complete", "teach_started"):
            self._broadcast(Message("teach_capture", event))
        elif name == "registered":
            self._broadcast(Message("register_points", event))
        elif name == "diagnostic":
            self._broadcast(
                Message("diagnostics", {k: v for k, v in event.items() if k != "event"})
            )
        elif name in ("task_validated", "task_started", "task_finished", "step_started", "step_finished", "phase_changed"):
            self._broadcast(Message("diagnostics", {"level": "info", "code": name, **event}))


def serve(engine: Engine, port: int, snapshot_hz: float = 60.0, ws_port: int | None = None) -> GatewayServer:
    """Start a gateway (engine ticking in real time) and return it."""
    server = GatewayServer(engine, port=port, snapshot_hz=snapshot_hz, ws_port=ws_port)
    server.start()
    return server
