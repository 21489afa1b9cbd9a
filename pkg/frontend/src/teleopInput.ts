// Device-agnostic teleop input: integrates 6 axis values (3 linear, 3
// angular, each in [-1, 1]) into a continuous controller pose stream.
// Axis values are low-pass smoothed so releasing every input decays the
// commanded increments to zero well inside 100 ms, and a heartbeat keeps
// the (constant) pose flowing when idle.

import { WirePose, identityPose } from "./protocol.js";

export interface InputMapping {
  linearSpeed: number; // m/s at full deflection
  angularSpeed: number; // rad/s at full deflection
  smoothingTau: number; // s, exponential axis smoothing
  deadzone: number;
}

export const DEFAULT_MAPPING: InputMapping = {
  linearSpeed: 0.1,
  angularSpeed: 0.8,
  smoothingTau: 0.02,
  deadzone: 0.08,
};

export type Axes6 = [number, number, number, number, number, number];

export const zeroAxes = (): Axes6 => [0, 0, 0, 0, 0, 0];

type Quat = [number, number, number, number]; // w, x, y, z

function quatMultiply(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

function quatNormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  const s = q[0] < 0 ? -1 / n : 1 / n;
  return [q[0] * s, q[1] * s, q[2] * s, q[3] * s];
}

function quatFromRotvec(v: [number, number, number]): Quat {
  const angle = Math.hypot(v[0], v[1], v[2]);
  if (angle < 1e-12) return [1, 0, 0, 0];
  const s = Math.sin(angle / 2) / angle;
  return [Math.cos(angle / 2), v[0] * s, v[1] * s, v[2] * s];
}

export class TeleopIntegrator {
  pose: WirePose;
  private smoothed: Axes6 = zeroAxes();

  constructor(private mapping: InputMapping = DEFAULT_MAPPING, start: WirePose = identityPose()) {
    this.pose = { xyz: [...start.xyz], quat_wxyz: [...start.quat_wxyz] };
  }

  reset(start: WirePose = identityPose()): void {
    this.pose = { xyz: [...start.xyz], quat_wxyz: [...start.quat_wxyz] };
    this.smoothed = zeroAxes();
  }

  /** Magnitude of the currently effective (smoothed) axis deflection. */
  get activity(): number {
    return Math.max(...this.smoothed.map(Math.abs));
  }

  step(raw: Axes6, dt: number): WirePose {
    const m = this.mapping;
    const alpha = 1 - Math.exp(-dt / m.smoothingTau);
    for (let i = 0; i < 6; i++) {
      const v = Math.abs(raw[i]) < m.deadzone ? 0 : Math.max(-1, Math.min(1, raw[i]));
      this.smoothed[i] += alpha * (v - this.smoothed[i]);
    }
    const [sx, sy, sz, rx, ry, rz] = this.smoothed;
    this.pose.xyz = [
      this.pose.xyz[0] + sx * m.linearSpeed * dt,
      this.pose.xyz[1] + sy * m.linearSpeed * dt,
      this.pose.xyz[2] + sz * m.linearSpeed * dt,
    ];
    const dq = quatFromRotvec([
      rx * m.angularSpeed * dt,
      ry * m.angularSpeed * dt,
      rz * m.angularSpeed * dt,
    ]);
    // world-frame rotation increments, matching the engine's delta rule
    this.pose.quat_wxyz = quatNormalize(quatMultiply(dq, this.pose.quat_wxyz));
    return { xyz: [...this.pose.xyz], quat_wxyz: [...this.pose.quat_wxyz] };
  }
}

export interface StreamerHooks {
  sendPose: (pose: WirePose) => void;
  now?: () => number;
}

/**
 * Fixed-rate pose streamer (default 60 Hz, spec floor is 30). Heartbeats
 * the unchanged pose when idle so the engine always has a fresh target.
 */
export class TeleopStreamer {
  readonly integrator: TeleopIntegrator;
  private axes: Axes6 = zeroAxes();
  private timer: ReturnType<typeof setInterval> | null = null;
  private lastTime: number | null = null;
  sent = 0;

  constructor(
    private hooks: StreamerHooks,
    mapping: InputMapping = DEFAULT_MAPPING,
    readonly rateHz: number = 60,
  ) {
    this.integrator = new TeleopIntegrator(mapping);
  }

  setAxes(axes: Axes6): void {
    this.axes = [...axes] as Axes6;
  }

  tick(): void {
    const now = (this.hooks.now ?? (() => performance.now() / 1000))();
    const dt = this.lastTime === null ? 1 / this.rateHz : Math.max(1e-4, now - this.lastTime);
    this.lastTime = now;
    const pose = this.integrator.step(this.axes, dt);
    this.hooks.sendPose(pose);
    this.sent += 1;
  }

  start(): void {
    if (this.timer !== null) return;
    this.lastTime = null;
    this.timer = setInterval(() => this.tick(), 1000 / this.rateHz);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.lastTime = null;
  }

  get running(): boolean {
    return this.timer !== null;
  }
}
