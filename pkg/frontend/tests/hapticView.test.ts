import { describe, expect, it } from "vitest";

import { brightestDot, defaultHandLayout, dotStyles } from "../src/hapticView.js";

describe("hand layout", () => {
  it("mirrors the engine's 16-actuator ids", () => {
    const ids = defaultHandLayout().map((d) => d.id);
    expect(ids).toHaveLength(16);
    for (const finger of ["thumb", "index", "middle", "ring", "little"]) {
      expect(ids).toContain(`${finger}_a`);
      expect(ids).toContain(`${finger}_b`);
    }
    expect(ids).toContain("palm_0");
    expect(ids).toContain("edge_l");
    expect(ids).toContain("edge_r");
  });

  it("places every dot inside the unit square", () => {
    for (const dot of defaultHandLayout()) {
      expect(dot.x).toBeGreaterThanOrEqual(0);
      expect(dot.x).toBeLessThanOrEqual(1);
      expect(dot.y).toBeGreaterThanOrEqual(0);
      expect(dot.y).toBeLessThanOrEqual(1);
    }
  });
});

describe("dotStyles", () => {
  it("maps intensities onto brightness and defaults to zero", () => {
    const styles = dotStyles({ intensities: { palm_0: 0.6 }, t: 0 });
    const palm = styles.find((s) => s.id === "palm_0")!;
    expect(palm.brightness).toBeCloseTo(0.6);
    expect(styles.filter((s) => s.id !== "palm_0").every((s) => s.brightness === 0)).toBe(true);
  });

  it("renders all dots dim for a null frame", () => {
    expect(dotStyles(null).every((s) => s.brightness === 0)).toBe(true);
  });

  it("clamps out-of-range values defensively", () => {
    const styles = dotStyles({ intensities: { palm_0: 1.7, palm_1: -0.2 }, t: 0 });
    expect(styles.find((s) => s.id === "palm_0")!.brightness).toBe(1);
    expect(styles.find((s) => s.id === "palm_1")!.brightness).toBe(0);
  });
});

describe("brightestDot", () => {
  it("picks the strongest actuator", () => {
    expect(brightestDot({ intensities: { a: 0.1, b: 0.9, c: 0.5 }, t: 0 })).toBe("b");
  });

  it("breaks ties by id order, matching the engine rule", () => {
    expect(brightestDot({ intensities: { zeta: 0.5, alpha: 0.5 }, t: 0 })).toBe("alpha");
  });

  it("returns null when everything is zero", () => {
    expect(brightestDot({ intensities: { a: 0, b: 0 }, t: 0 })).toBeNull();
    expect(brightestDot(null)).toBeNull();
  });
});
