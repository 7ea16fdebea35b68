// Calibration wizard: renders the service's timed posture prompts (the
// on-robot LED cue, replaced by screen guidance) and surfaces the recovered
// classification points for accept/retry.

import type { CalibrationResultMessage, PromptMessage } from "./protocol.js";

export type WizardPhase =
  | "inactive"
  | "waiting_ack"
  | "running"
  | "succeeded"
  | "failed";

export interface WizardView {
  phase: WizardPhase;
  posture: string | null;
  secondsLeft: number;
  betas: number[] | null;
  error: string | null;
}

const POSTURE_LABELS: Record<string, string> = {
  rest: "Relax — hands off the bar",
  spin_cw: "Lean to spin clockwise (hold hard)",
  turn_cw: "Lean to turn clockwise",
  straight: "Press straight ahead",
  turn_ccw: "Lean to turn counter-clockwise",
  spin_ccw: "Lean to spin counter-clockwise (hold hard)",
};

export function postureLabel(posture: string): string {
  return POSTURE_LABELS[posture] ?? posture;
}

export class CalibrationWizard {
  private view: WizardView = {
    phase: "inactive",
    posture: null,
    secondsLeft: 0,
    betas: null,
    error: null,
  };

  get state(): WizardView {
    return { ...this.view };
  }

  get active(): boolean {
    return this.view.phase === "waiting_ack" || this.view.phase === "running";
  }

  /** Call when sending start_calibration; the first prompt arms the ack. */
  begin(): void {
    this.view = {
      phase: "waiting_ack",
      posture: null,
      secondsLeft: 0,
      betas: null,
      error: null,
    };
  }

  /** Call when the operator confirms they are ready (sends posture_ack). */
  confirmReady(): void {
    if (this.view.phase === "waiting_ack") this.view.phase = "running";
  }

  onPrompt(msg: PromptMessage): void {
    if (this.view.phase === "inactive") return;
    this.view.posture = msg.posture;
    this.view.secondsLeft = msg.seconds_left;
  }

  onResult(msg: CalibrationResultMessage): void {
    if (msg.ok && msg.profile) {
      this.view = {
        phase: "succeeded",
        posture: null,
        secondsLeft: 0,
        betas: [...msg.profile.betas],
        error: null,
      };
    } else {
      const where = msg.column !== undefined ? ` (column ${msg.column})` : "";
      this.view = {
        phase: "failed",
        posture: null,
        secondsLeft: 0,
        betas: null,
        error: `${msg.detail ?? msg.code ?? "calibration failed"}${where}`,
      };
    }
  }

  /** Accept the result or dismiss a failure; back to inactive either way. */
  dismiss(): void {
    this.view = {
      phase: "inactive",
      posture: null,
      secondsLeft: 0,
      betas: null,
      error: null,
    };
  }
}
