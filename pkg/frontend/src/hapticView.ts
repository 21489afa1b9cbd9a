// Hand-diagram view model for haptic frames: actuator dots at membrane
// coordinates, brightness proportional to intensity. The dot geometry
// mirrors the engine's default 16-actuator layout; intensities only ever
// come from received haptic_frame messages.

import { HapticFramePayload } from "./protocol.js";

export interface ActuatorDot {
  id: string;
  x: number; // normalized hand coordinates, y up
  y: number;
  region: "fingertip" | "palm" | "edge";
}

const FINGERS: [string, number, number][] = [
  ["thumb", 0.15, 0.55],
  ["index", 0.35, 0.92],
  ["middle", 0.5, 0.97],
  ["ring", 0.65, 0.92],
  ["little", 0.82, 0.82],
];

export function defaultHandLayout(): ActuatorDot[] {
  const dots: ActuatorDot[] = [];
  for (const [name, x, y] of FINGERS) {
    dots.push({ id: `${name}_a`, x, y, region: "fingertip" });
    dots.push({ id: `${name}_b`, x, y: y - 0.08, region: "fingertip" });
  }
  const palm: [string, number, number][] = [
    ["palm_0", 0.38, 0.45],
    ["palm_1", 0.62, 0.45],
    ["palm_2", 0.38, 0.25],
    ["palm_3", 0.62, 0.25],
  ];
  for (const [id, x, y] of palm) dots.push({ id, x, y, region: "palm" });
  dots.push({ id: "edge_l", x: 0.08, y: 0.3, region: "edge" });
  dots.push({ id: "edge_r", x: 0.92, y: 0.3, region: "edge" });
  return dots;
}

export interface DotStyle extends ActuatorDot {
  brightness: number; // [0, 1]
}

export function dotStyles(frame: HapticFramePayload | null, layout = defaultHandLayout()): DotStyle[] {
  return layout.map((dot) => ({
    ...dot,
    brightness: Math.max(0, Math.min(1, frame?.intensities[dot.id] ?? 0)),
  }));
}

/**
 * Strongest actuator id, ties broken by id order, null when all zero —
 * the exact argmax rule the engine uses for direction fidelity.
 */
export function brightestDot(frame: HapticFramePayload | null): string | null {
  if (!frame) return null;
  let best: string | null = null;
  let bestValue = 0;
  for (const id of Object.keys(frame.intensities).sort()) {
    const v = frame.intensities[id];
    if (v > bestValue) {
      best = id;
      bestValue = v;
    }
  }
  return best;
}

/** Canvas renderer for the hand diagram (browser only). */
export function drawHandDiagram(
  ctx: CanvasRenderingContext2D,
  frame: HapticFramePayload | null,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#141820";
  ctx.fillRect(0, 0, width, height);
  const brightest = brightestDot(frame);
  for (const dot of dotStyles(frame)) {
    const px = dot.x * width;
    const py = (1 - dot.y) * height;
    const radius = dot.region === "fingertip" ? 7 : 9;
    const b = dot.brightness;
    ctx.beginPath();
    ctx.arc(px, py, radius, 0, 2 * Math.PI);
    const glow = Math.round(40 + 215 * b);
    ctx.fillStyle = `rgb(${glow}, ${Math.round(glow * 0.65)}, 40)`;
    ctx.fill();
    ctx.lineWidth = dot.id === brightest && b > 0 ? 3 : 1;
    ctx.strokeStyle = dot.id === brightest && b > 0 ? "#ffffff" : "#3a4254";
    ctx.stroke();
  }
}
