// UI session: owns the transport, sequence numbers, the teleop token, and
// fan-out of snapshots / haptic frames / diagnostics to views. The UI never
// fabricates state; everything rendered traces to a received message.

import {
  HapticFramePayload,
  Message,
  Snapshot,
  WirePose,
} from "./protocol.js";
import { Transport } from "./transport.js";

export type MuxSource = "idle" | "teleop" | "autonomous";

export interface SessionEvents {
  snapshot?: (snap: Snapshot) => void;
  haptic?: (frame: HapticFramePayload) => void;
  diagnostics?: (payload: Record<string, unknown>) => void;
  teach?: (payload: Record<string, unknown>) => void;
  registered?: (payload: Record<string, unknown>) => void;
  tokenChanged?: (held: boolean) => void;
  closed?: () => void;
}

export class UiSession {
  private seq = 0;
  tokenHeld = false;
  teleopActivated = false;
  lastSnapshot: Snapshot | null = null;
  lastHaptic: HapticFramePayload | null = null;

  constructor(private transport: Transport, private events: SessionEvents = {}) {
    transport.onMessage((msg) => this.dispatch(msg));
    transport.onClose(() => {
      this.tokenHeld = false;
      this.teleopActivated = false;
      this.events.closed?.();
    });
  }

  get connected(): boolean {
    return this.transport.connected;
  }

  private dispatch(msg: Message): void {
    switch (msg.type) {
      case "state_snapshot":
        this.lastSnapshot = msg.payload as unknown as Snapshot;
        this.events.snapshot?.(this.lastSnapshot);
        break;
      case "haptic_frame":
        this.lastHaptic = msg.payload as unknown as HapticFramePayload;
        this.events.haptic?.(this.lastHaptic);
        break;
      case "diagnostics": {
        const code = msg.payload.code as string | undefined;
        if (code === "token_granted") {
          this.tokenHeld = true;
          this.events.tokenChanged?.(true);
        } else if (code === "token_denied") {
          this.tokenHeld = false;
          this.events.tokenChanged?.(false);
        }
        this.events.diagnostics?.(msg.payload);
        break;
      }
      case "teach_capture":
        this.events.teach?.(msg.payload);
        break;
      case "register_points":
        this.events.registered?.(msg.payload);
        break;
      default:
        break;
    }
  }

  send(type: Message["type"], payload: Record<string, unknown>): number {
    this.seq += 1;
    this.transport.send({ type, seq: this.seq, payload });
    return this.seq;
  }

  requestMux(source: MuxSource): void {
    if (source !== "teleop") {
      this.teleopActivated = false;
      if (this.tokenHeld) {
        this.tokenHeld = false;
        this.events.tokenChanged?.(false);
      }
    }
    this.send("mode_switch", { source });
  }

  /** Activation handshake: target snaps to the current ee pose, no jump. */
  activateTeleop(pose: WirePose): void {
    this.send("ctrl_pose", { pose, activate: true });
    this.teleopActivated = true;
  }

  pauseTeleop(): void {
    this.send("ctrl_pose", { pause: true });
    this.teleopActivated = false;
  }

  /** Stream one pose sample; only legal while the token is held and teleop
   * is activated (enforced here, not just in the UI chrome). */
  sendCtrlPose(pose: WirePose): boolean {
    if (!this.tokenHeld || !this.teleopActivated) return false;
    this.send("ctrl_pose", { pose });
    return true;
  }

  submitTask(task: Record<string, unknown>): void {
    this.send("task_submit", { task });
  }

  controlTask(action: "start" | "abort"): void {
    this.send("task_control", { action });
  }

  startTeach(objectId: string, objectClass = ""): void {
    this.send("teach_capture", { action: "start", object_id: objectId, class: objectClass });
  }

  captureTeach(phase: "pre" | "grasp" | "post"): void {
    this.send("teach_capture", { phase });
  }

  registerPoints(points: [number, number, number][], referenceLength?: number): void {
    this.send("register_points", {
      points,
      ...(referenceLength !== undefined ? { reference_length: referenceLength } : {}),
    });
  }

  close(): void {
    this.transport.close();
  }
}
