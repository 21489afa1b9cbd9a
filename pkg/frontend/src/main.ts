// Browser entry point: connects to the engine gateway over WebSocket,
// wires the scene view, teleop input, teach panel, task controls and the
// haptic hand diagram. Configuration via URL parameters:
//   ?host=127.0.0.1&ws=8572&preset=gamepad|keyboard

import * as THREE from "three";

import { drawHandDiagram } from "./hapticView.js";
import { KeyboardAxes, pollGamepadAxes } from "./inputDevices.js";
import { Snapshot, identityPose } from "./protocol.js";
import { SceneRenderer, buildSceneModel } from "./sceneView.js";
import { UiSession } from "./session.js";
import { TeachPanel } from "./teach.js";
import { TeleopStreamer, zeroAxes } from "./teleopInput.js";
import { WebSocketTransport } from "./transport.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const params = new URLSearchParams(location.search);
const host = params.get("host") ?? location.hostname ?? "127.0.0.1";
const wsPort = Number(params.get("ws") ?? 8572);
const preset = params.get("preset") ?? "gamepad";

const statusEl = el<HTMLDivElement>("status");
const logEl = el<HTMLPreElement>("log");
const banner = el<HTMLDivElement>("banner");

function log(text: string): void {
  logEl.textContent = `${text}\n${logEl.textContent ?? ""}`.split("\n").slice(0, 60).join("\n");
}

const transport = new WebSocketTransport(`ws://${host}:${wsPort}`, () => {
  statusEl.textContent = `connected to ws://${host}:${wsPort}`;
  banner.style.display = "none";
});

const teach = new TeachPanel();
let latest: Snapshot | null = null;

const session = new UiSession(transport, {
  snapshot: (snap) => {
    latest = snap;
  },
  haptic: (frame) => {
    const canvas = el<HTMLCanvasElement>("hand");
    drawHandDiagram(canvas.getContext("2d")!, frame, canvas.width, canvas.height);
  },
  diagnostics: (payload) => {
    if (payload.code !== "hello") log(`[${payload.level}] ${payload.message ?? payload.code}`);
  },
  teach: (payload) => {
    teach.onEngineEvent(payload);
    renderTeach();
  },
  tokenChanged: (held) => {
    el<HTMLSpanElement>("token").textContent = held ? "held" : "not held";
  },
  closed: () => {
    statusEl.textContent = "disconnected";
    banner.textContent = "connection lost - scene frozen";
    banner.style.display = "block";
    streamer.stop();
  },
});

// --- teleop ----------------------------------------------------------------

const streamer = new TeleopStreamer({
  sendPose: (pose) => {
    if (!session.sendCtrlPose(pose)) streamer.stop();
  },
});
const keyboard = new KeyboardAxes();
keyboard.attach(window);

function pumpInputs(): void {
  const pad = preset === "keyboard" ? null : pollGamepadAxes();
  streamer.setAxes(pad ?? keyboard.read() ?? zeroAxes());
  requestAnimationFrame(pumpInputs);
}
pumpInputs();

el<HTMLButtonElement>("btn-teleop").onclick = () => session.requestMux("teleop");
el<HTMLButtonElement>("btn-idle").onclick = () => {
  streamer.stop();
  session.requestMux("idle");
};
el<HTMLButtonElement>("btn-activate").onclick = () => {
  streamer.integrator.reset(identityPose());
  session.activateTeleop(identityPose());
  streamer.start();
};
el<HTMLButtonElement>("btn-pause").onclick = () => {
  streamer.stop();
  session.pauseTeleop();
};

// --- teach panel --------------------------------------------------------------

function renderTeach(): void {
  el<HTMLSpanElement>("teach-state").textContent = teach.primitive
    ? "complete"
    : teach.active
      ? `capturing (next: ${teach.pendingPhase})`
      : "idle";
  const json = teach.downloadJson();
  el<HTMLPreElement>("teach-json").textContent = json ?? "";
  el<HTMLAnchorElement>("teach-download").style.display = json ? "inline" : "none";
}

el<HTMLButtonElement>("btn-teach-start").onclick = () => {
  const objectId = el<HTMLInputElement>("teach-object").value.trim();
  if (!objectId) return log("[warn] teach: object id required");
  teach.start(objectId);
  session.startTeach(objectId);
  renderTeach();
};

for (const phase of ["pre", "grasp", "post"] as const) {
  el<HTMLButtonElement>(`btn-capture-${phase}`).onclick = () => {
    const attempt = teach.requestCapture(phase);
    if (!attempt.ok) return log(`[warn] ${attempt.warning}`);
    session.captureTeach(phase);
  };
}

el<HTMLAnchorElement>("teach-download").onclick = (ev) => {
  const json = teach.downloadJson();
  if (!json) return ev.preventDefault();
  const blob = new Blob([json], { type: "application/json" });
  const a = ev.target as HTMLAnchorElement;
  a.href = URL.createObjectURL(blob);
  a.download = "taught_primitive.json";
};

// --- tasks ------------------------------------------------------------------

el<HTMLButtonElement>("btn-task-submit").onclick = () => {
  try {
    session.submitTask(JSON.parse(el<HTMLTextAreaElement>("task-json").value));
  } catch (err) {
    log(`[error] task JSON: ${(err as Error).message}`);
  }
};
el<HTMLButtonElement>("btn-task-start").onclick = () => {
  session.requestMux("autonomous");
  session.controlTask("start");
};
el<HTMLButtonElement>("btn-task-abort").onclick = () => session.controlTask("abort");

// --- scene loop ------------------------------------------------------------------

const sceneCanvas = el<HTMLCanvasElement>("scene");
const renderer = new SceneRenderer(THREE, sceneCanvas);
const halfExtents = new Map<string, [number, number, number]>();

function frame(): void {
  if (latest) {
    renderer.update(buildSceneModel(latest), halfExtents);
    el<HTMLSpanElement>("mux").textContent = latest.mux;
    el<HTMLSpanElement>("mode").textContent = latest.controller_mode;
    const task = latest.task;
    el<HTMLSpanElement>("task-state").textContent = task
      ? `${task.name}: step ${task.step ?? "-"} ${task.phase ?? ""}${task.done ? (task.failed ? " FAILED" : " DONE") : ""}`
      : "none";
  }
  renderer.render();
  requestAnimationFrame(frame);
}
frame();
