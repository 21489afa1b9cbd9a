// Wire protocol shared with the engine gateway: one JSON object per line
// (TCP) or per WebSocket text message. Poses are {xyz, quat_wxyz} in
// meters/radians, quaternion w-first.

export type MessageType =
  | "ctrl_pose"
  | "mode_switch"
  | "teach_capture"
  | "task_submit"
  | "task_control"
  | "state_snapshot"
  | "haptic_frame"
  | "diagnostics"
  | "register_points";

export const MESSAGE_TYPES: readonly MessageType[] = [
  "ctrl_pose",
  "mode_switch",
  "teach_capture",
  "task_submit",
  "task_control",
  "state_snapshot",
  "haptic_frame",
  "diagnostics",
  "register_points",
];

export interface WirePose {
  xyz: [number, number, number];
  quat_wxyz: [number, number, number, number];
}

export interface Message {
  type: MessageType;
  seq: number;
  payload: Record<string, unknown>;
}

export interface Snapshot {
  t: number;
  tick: number;
  q: number[];
  dq: number[];
  frames: Record<string, WirePose>;
  objects: SnapshotObject[];
  mux: "idle" | "teleop" | "autonomous";
  controller_mode: "slow" | "fast";
  teleop_active: boolean;
  gripper: { width: number; attached: string | null };
  twist: number[];
  contacts: { object_id: string; force: number[] }[];
  task: {
    name: string;
    step_index: number;
    step: string | null;
    phase: string | null;
    done: boolean;
    failed: boolean;
  } | null;
}

export interface SnapshotObject {
  id: string;
  class: string;
  pose: WirePose;
  status: "visible" | "remembered";
  last_seen: number;
  attached: boolean;
}

export interface HapticFramePayload {
  intensities: Record<string, number>;
  t: number;
}

export const identityPose = (): WirePose => ({ xyz: [0, 0, 0], quat_wxyz: [1, 0, 0, 0] });

export function encodeMessage(msg: Message): string {
  return JSON.stringify({ type: msg.type, seq: msg.seq, payload: msg.payload }) + "\n";
}

export class ProtocolError extends Error {}

export function decodeMessage(line: string): Message {
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch (err) {
    throw new ProtocolError(`malformed JSON: ${(err as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new ProtocolError("frame must be a JSON object");
  }
  const rec = doc as Record<string, unknown>;
  if (typeof rec.type !== "string" || !MESSAGE_TYPES.includes(rec.type as MessageType)) {
    throw new ProtocolError(`unknown message type ${String(rec.type)}`);
  }
  const seq = typeof rec.seq === "number" ? rec.seq : 0;
  const payload = (rec.payload ?? {}) as Record<string, unknown>;
  return { type: rec.type as MessageType, seq, payload };
}

/** Incremental NDJSON splitter for stream transports. */
export class LineSplitter {
  private buffer = "";

  push(chunk: string): string[] {
    this.buffer += chunk;
    const lines = this.buffer.split("\n");
    this.buffer = lines.pop() ?? "";
    return lines.filter((l) => l.trim().length > 0);
  }
}
