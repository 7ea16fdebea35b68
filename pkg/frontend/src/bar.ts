// Virtual pressure bar: turns pointer position / keyboard state into the
// per-column readings the server expects, using the same Gaussian press shape
// the simulator's synthetic frames use. The frames it emits are *input*; every
// quantity the UI displays comes back from the server.

import type { LayoutInfo } from "./protocol.js";

const KEY_STEP = 0.05; // cop / magnitude change per arrow keypress
const THUMB_AMPLITUDE = 0.9; // fraction of sensor_max on a held extreme

export function normalizedPositions(layout: LayoutInfo): number[] {
  const x = layout.column_positions_mm;
  const half = Math.abs(x[x.length - 1] - x[0]) / 2;
  return x.map((v) => Math.max(-1, Math.min(1, v / half)));
}

export interface BarSnapshot {
  cop: number;
  magnitude: number;
  engaged: boolean;
  thumbLeft: boolean;
  thumbRight: boolean;
}

export class VirtualBar {
  readonly layout: LayoutInfo;
  readonly positions: number[];
  pressWidth = 0.25;

  private copTarget = 0;
  private magnitudeTarget = 0;
  private pointerDown = false;
  private keyboardEngaged = false;
  private thumbLeftDown = false;
  private thumbRightDown = false;

  constructor(layout: LayoutInfo) {
    this.layout = layout;
    this.positions = normalizedPositions(layout);
  }

  get cop(): number {
    return this.copTarget;
  }

  get magnitude(): number {
    return this.magnitudeTarget;
  }

  get engaged(): boolean {
    return this.pointerDown || this.keyboardEngaged || this.thumbsActive;
  }

  get thumbsActive(): boolean {
    return this.thumbLeftDown || this.thumbRightDown;
  }

  snapshot(): BarSnapshot {
    return {
      cop: this.copTarget,
      magnitude: this.magnitudeTarget,
      engaged: this.engaged,
      thumbLeft: this.thumbLeftDown,
      thumbRight: this.thumbRightDown,
    };
  }

  /** Pointer press/drag: s in [-1, 1] along the bar, depth in [0, 1]. */
  pointerPress(s: number, depth: number): void {
    this.pointerDown = true;
    this.copTarget = clamp(s, -1, 1);
    this.magnitudeTarget = clamp(depth, 0, 1);
  }

  pointerRelease(): void {
    this.pointerDown = false;
    if (!this.keyboardEngaged) this.magnitudeTarget = 0;
  }

  /** Keyboard fallback; returns true when the key is one of ours. */
  keyDown(code: string): boolean {
    switch (code) {
      case "ArrowLeft":
        this.keyboardEngaged = true;
        this.copTarget = clamp(this.copTarget - KEY_STEP, -1, 1);
        return true;
      case "ArrowRight":
        this.keyboardEngaged = true;
        this.copTarget = clamp(this.copTarget + KEY_STEP, -1, 1);
        return true;
      case "ArrowUp":
        this.keyboardEngaged = true;
        this.magnitudeTarget = clamp(this.magnitudeTarget + KEY_STEP, 0, 1);
        return true;
      case "ArrowDown":
        this.magnitudeTarget = clamp(this.magnitudeTarget - KEY_STEP, 0, 1);
        if (this.magnitudeTarget === 0) this.keyboardEngaged = false;
        return true;
      case "Space":
        this.release();
        return true;
      case "KeyZ":
        this.thumbLeftDown = true;
        return true;
      case "KeyX":
        this.thumbRightDown = true;
        return true;
      default:
        return false;
    }
  }

  keyUp(code: string): boolean {
    if (code === "KeyZ") {
      this.thumbLeftDown = false;
      return true;
    }
    if (code === "KeyX") {
      this.thumbRightDown = false;
      return true;
    }
    return false;
  }

  /** Let go of everything: the next frame emitted is an explicit idle frame. */
  release(): void {
    this.pointerDown = false;
    this.keyboardEngaged = false;
    this.thumbLeftDown = false;
    this.thumbRightDown = false;
    this.magnitudeTarget = 0;
  }

  get idle(): boolean {
    return !this.engaged || (this.magnitudeTarget === 0 && !this.thumbsActive);
  }

  /**
   * Per-column readings for the current bar state, rows x columns.
   * Thumb triggers press only the extreme column(s) (the interior must stay
   * quiet for the server's backward detector); otherwise a Gaussian bump of
   * the chosen magnitude is centred on the pointer position.
   */
  readings(): number[][] {
    const n = this.layout.columns;
    const row = new Array<number>(n).fill(0);
    if (this.thumbsActive) {
      const amp = THUMB_AMPLITUDE * this.layout.sensor_max;
      if (this.thumbLeftDown) row[0] = amp;
      if (this.thumbRightDown) row[n - 1] = amp;
    } else if (this.engaged && this.magnitudeTarget > 0) {
      const amp = this.magnitudeTarget * this.layout.sensor_max;
      const denom = 2 * this.pressWidth * this.pressWidth;
      for (let i = 0; i < n; i++) {
        const d = this.positions[i] - this.copTarget;
        row[i] = Math.min(
          this.layout.sensor_max,
          amp * Math.exp(-(d * d) / denom),
        );
      }
    }
    const out: number[][] = [];
    for (let r = 0; r < this.layout.rows; r++) out.push(row.slice());
    return out;
  }
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}
