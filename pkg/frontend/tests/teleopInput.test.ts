import { describe, expect, it } from "vitest";

import { identityPose } from "../src/protocol.js";
import {
  Axes6,
  DEFAULT_MAPPING,
  TeleopIntegrator,
  TeleopStreamer,
  zeroAxes,
} from "../src/teleopInput.js";

const HOLD_X: Axes6 = [1, 0, 0, 0, 0, 0];

describe("TeleopIntegrator", () => {
  it("integrates a held axis at the mapped speed", () => {
    // hold +x for 1 s at 0.1 m/s: pose advances ~0.1 m (minus smoothing lag)
    const integ = new TeleopIntegrator({ ...DEFAULT_MAPPING, smoothingTau: 1e-4 });
    const dt = 1 / 60;
    for (let t = 0; t < 1.0 - 1e-9; t += dt) integ.step(HOLD_X, dt);
    expect(integ.pose.xyz[0]).toBeCloseTo(0.1, 3);
    expect(integ.pose.xyz[1]).toBeCloseTo(0, 9);
  });

  it("heartbeats a constant pose with no input", () => {
    const integ = new TeleopIntegrator();
    const before = [...integ.pose.xyz];
    for (let i = 0; i < 100; i++) integ.step(zeroAxes(), 1 / 60);
    expect(integ.pose.xyz).toEqual(before);
  });

  it("decays commanded increments to zero within 100 ms of release", () => {
    const integ = new TeleopIntegrator();
    const dt = 1 / 120;
    for (let i = 0; i < 120; i++) integ.step(HOLD_X, dt);
    expect(integ.activity).toBeGreaterThan(0.9);
    for (let t = 0; t < 0.1 - 1e-9; t += dt) integ.step(zeroAxes(), dt);
    expect(integ.activity).toBeLessThan(0.01); // < 1% residual inside 100 ms
  });

  it("applies the deadzone", () => {
    const integ = new TeleopIntegrator();
    for (let i = 0; i < 50; i++) integ.step([0.05, 0, 0, 0, 0, 0], 1 / 60);
    expect(integ.pose.xyz[0]).toBe(0);
  });

  it("keeps the quaternion unit under rotation input", () => {
    const integ = new TeleopIntegrator();
    for (let i = 0; i < 500; i++) integ.step([0, 0, 0, 1, 0.5, -0.3], 1 / 60);
    const [w, x, y, z] = integ.pose.quat_wxyz;
    expect(Math.hypot(w, x, y, z)).toBeCloseTo(1, 9);
    expect(w).toBeGreaterThanOrEqual(0);
  });

  it("yaw input rotates about world z", () => {
    const integ = new TeleopIntegrator({ ...DEFAULT_MAPPING, smoothingTau: 1e-4 });
    // 1 rad/s-equivalent yaw for ~pi/(angularSpeed) seconds -> 90 deg
    const dt = 1 / 240;
    const total = Math.PI / 2 / DEFAULT_MAPPING.angularSpeed;
    for (let t = 0; t < total - 1e-9; t += dt) integ.step([0, 0, 0, 0, 0, 1], dt);
    const [w, x, y, z] = integ.pose.quat_wxyz;
    expect(x).toBeCloseTo(0, 6);
    expect(y).toBeCloseTo(0, 6);
    expect(Math.abs(z)).toBeCloseTo(Math.sin(Math.PI / 4), 2);
    expect(w).toBeCloseTo(Math.cos(Math.PI / 4), 2);
  });

  it("reset restarts from the given pose", () => {
    const integ = new TeleopIntegrator();
    for (let i = 0; i < 50; i++) integ.step(HOLD_X, 1 / 30);
    integ.reset(identityPose());
    expect(integ.pose.xyz).toEqual([0, 0, 0]);
    expect(integ.activity).toBe(0);
  });
});

describe("TeleopStreamer", () => {
  it("emits one pose per tick with manual clocking", () => {
    const sent: number[] = [];
    let clock = 0;
    const streamer = new TeleopStreamer(
      { sendPose: (p) => sent.push(p.xyz[0]), now: () => clock },
      { ...DEFAULT_MAPPING, smoothingTau: 1e-4 },
      60,
    );
    streamer.setAxes(HOLD_X);
    for (let i = 0; i < 60; i++) {
      clock += 1 / 60;
      streamer.tick();
    }
    expect(streamer.sent).toBe(60);
    expect(sent[sent.length - 1]).toBeCloseTo(0.1, 3);
  });

  it("streams at its configured rate on the wall clock", async () => {
    const sent: number[] = [];
    const streamer = new TeleopStreamer({ sendPose: () => sent.push(1) });
    streamer.start();
    await new Promise((r) => setTimeout(r, 500));
    streamer.stop();
    // 60 Hz nominal; require the >= 30 Hz contract with headroom for jitter
    expect(sent.length).toBeGreaterThanOrEqual(15);
    expect(streamer.running).toBe(false);
  });
});
