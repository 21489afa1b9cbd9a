// Teach panel state machine: start a session for an object, capture
// pre -> grasp -> post in order (skips are rejected with a warning), and
// hold the generated primitive JSON for display/download once the engine
// reports completion.

export type TeachPhase = "pre" | "grasp" | "post";

export const TEACH_ORDER: readonly TeachPhase[] = ["pre", "grasp", "post"];

export interface CaptureAttempt {
  ok: boolean;
  warning?: string;
}

export class TeachPanel {
  objectId: string | null = null;
  captured: TeachPhase[] = [];
  primitive: Record<string, unknown> | null = null;
  warnings: string[] = [];

  get active(): boolean {
    return this.objectId !== null && this.primitive === null;
  }

  get pendingPhase(): TeachPhase | null {
    return this.captured.length < TEACH_ORDER.length ? TEACH_ORDER[this.captured.length] : null;
  }

  start(objectId: string): void {
    this.objectId = objectId;
    this.captured = [];
    this.primitive = null;
    this.warnings = [];
  }

  /** Gate a capture request against the enforced order. */
  requestCapture(phase: TeachPhase): CaptureAttempt {
    if (!this.active) {
      return { ok: false, warning: "no active teach session" };
    }
    const pending = this.pendingPhase;
    if (pending === null) {
      return { ok: false, warning: "all phases already captured" };
    }
    if (phase !== pending) {
      const warning = `capture order is pre → grasp → post; expected '${pending}', got '${phase}'`;
      this.warnings.push(warning);
      return { ok: false, warning };
    }
    return { ok: true };
  }

  /** Apply a teach_capture event from the engine. */
  onEngineEvent(payload: Record<string, unknown>): void {
    const event = payload.event as string | undefined;
    if (event === "teach_captured") {
      const phase = payload.phase as TeachPhase;
      if (this.pendingPhase === phase) {
        this.captured.push(phase);
      }
    } else if (event === "teach_complete") {
      this.primitive = (payload.primitive as Record<string, unknown>) ?? null;
    } else if (event === "teach_started") {
      this.captured = [];
      this.primitive = null;
    }
  }

  /** Pretty JSON for the download button; null until complete. */
  downloadJson(): string | null {
    return this.primitive === null ? null : JSON.stringify(this.primitive, null, 2);
  }
}
