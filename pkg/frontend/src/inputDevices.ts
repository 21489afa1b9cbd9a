// Browser input devices mapped to the 6 teleop axes. Gamepad-first (two
// sticks for xy + z/yaw on triggers and bumpers, d-pad pitch/roll), with a
// keyboard fallback.

import { Axes6, zeroAxes } from "./teleopInput.js";

export function pollGamepadAxes(): Axes6 | null {
  const pads = typeof navigator !== "undefined" ? navigator.getGamepads?.() ?? [] : [];
  const gp = Array.from(pads).find(Boolean);
  if (!gp) return null;
  const axis = (i: number) => gp.axes?.[i] ?? 0;
  const button = (i: number) => gp.buttons?.[i]?.value ?? 0;
  const axes = zeroAxes();
  axes[0] = axis(0); // left stick x -> world x
  axes[1] = -axis(1); // left stick y -> world y
  axes[2] = button(7) - button(6); // triggers -> world z
  axes[3] = -axis(3); // right stick y -> pitch (about x)
  axes[4] = axis(2); // right stick x -> roll (about y)
  axes[5] = (gp.buttons?.[5]?.pressed ? 1 : 0) - (gp.buttons?.[4]?.pressed ? 1 : 0); // bumpers -> yaw
  return axes;
}

const KEY_AXES: Record<string, [number, number]> = {
  KeyD: [0, 1],
  KeyA: [0, -1],
  KeyW: [1, 1],
  KeyS: [1, -1],
  KeyE: [2, 1],
  KeyQ: [2, -1],
  ArrowUp: [3, 1],
  ArrowDown: [3, -1],
  ArrowRight: [4, 1],
  ArrowLeft: [4, -1],
  KeyX: [5, 1],
  KeyZ: [5, -1],
};

export class KeyboardAxes {
  private held = new Set<string>();

  attach(target: { addEventListener: Window["addEventListener"] }): void {
    target.addEventListener("keydown", (ev) => {
      if ((ev as KeyboardEvent).code in KEY_AXES) this.held.add((ev as KeyboardEvent).code);
    });
    target.addEventListener("keyup", (ev) => {
      this.held.delete((ev as KeyboardEvent).code);
    });
  }

  read(): Axes6 {
    const axes = zeroAxes();
    for (const code of this.held) {
      const [idx, sign] = KEY_AXES[code];
      axes[idx] += sign;
    }
    return axes.map((v) => Math.max(-1, Math.min(1, v))) as Axes6;
  }
}
