// Canvas rendering: top-down circuit view plus instrument gauges. Every gauge
// value comes from server telemetry (delta, P, v, omega, mode, metrics); the
// only locally-derived drawing is the input widget showing where the operator
// is pressing the virtual bar.

import type { BarSnapshot } from "./bar.js";
import type { CircuitSpec, LayoutInfo, ProfileInfo, StateMessage } from "./protocol.js";

export interface TrailPoint {
  x: number;
  y: number;
}

export interface SceneData {
  layout: LayoutInfo;
  profile: ProfileInfo;
  circuit: CircuitSpec;
  state: StateMessage | null;
  trail: TrailPoint[];
  bar: BarSnapshot;
  phase: string;
  connection: string;
}

const REGION_COLORS = ["#b4543c", "#c8883c", "#4c9e63", "#c8883c", "#b4543c"];
const REGION_NAMES = ["spin cw", "turn cw", "straight", "turn ccw", "spin ccw"];

/** World (meters) -> canvas transform for the circuit viewport. */
export function worldTransform(
  circuit: CircuitSpec,
  width: number,
  height: number,
  margin = 40,
): { scale: number; ox: number; oy: number } {
  const xs = circuit.markers_m.map((m) => m[0]);
  const ys = circuit.markers_m.map((m) => m[1]);
  const minX = Math.min(...xs) - 2;
  const maxX = Math.max(...xs) + 2;
  const minY = Math.min(...ys) - 2.5;
  const maxY = Math.max(...ys) + 2.5;
  const scale = Math.min(
    (width - 2 * margin) / (maxX - minX),
    (height - 2 * margin) / (maxY - minY),
  );
  return {
    scale,
    ox: margin - minX * scale,
    oy: height - margin + minY * scale, // y up in world, down on canvas
  };
}

export function toCanvas(
  t: { scale: number; ox: number; oy: number },
  x: number,
  y: number,
): [number, number] {
  return [t.ox + x * t.scale, t.oy - y * t.scale];
}

export function drawCircuitView(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  data: SceneData,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, width, height);
  const tf = worldTransform(data.circuit, width, height);

  // circuit markers
  for (const [mx, my] of data.circuit.markers_m) {
    const [cx, cy] = toCanvas(tf, mx, my);
    ctx.beginPath();
    ctx.arc(cx, cy, 8, 0, 2 * Math.PI);
    ctx.fillStyle = "#d9a441";
    ctx.fill();
    ctx.beginPath();
    ctx.arc(cx, cy, data.circuit.waypoint_radius_m * tf.scale, 0, 2 * Math.PI);
    ctx.strokeStyle = "rgba(217,164,65,0.25)";
    ctx.stroke();
  }

  // path trace
  if (data.trail.length > 1) {
    ctx.beginPath();
    const [sx, sy] = toCanvas(tf, data.trail[0].x, data.trail[0].y);
    ctx.moveTo(sx, sy);
    for (const p of data.trail) {
      const [px, py] = toCanvas(tf, p.x, p.y);
      ctx.lineTo(px, py);
    }
    ctx.strokeStyle = "#3f7fbf";
    ctx.lineWidth = 2;
    ctx.stroke();
    ctx.lineWidth = 1;
  }

  // robot pose
  const st = data.state;
  if (st !== null) {
    const [rx, ry] = toCanvas(tf, st.x, st.y);
    const r = 12;
    ctx.save();
    ctx.translate(rx, ry);
    ctx.rotate(-st.theta);
    ctx.beginPath();
    ctx.moveTo(r, 0);
    ctx.lineTo(-r * 0.6, r * 0.55);
    ctx.lineTo(-r * 0.6, -r * 0.55);
    ctx.closePath();
    ctx.fillStyle = st.mode === "backward" ? "#d35454" : "#6fd36f";
    ctx.fill();
    ctx.restore();
  }
}

/**
 * Center-of-pressure gauge segmented at the profile's classification points,
 * so the operator can see which control region their press lands in.
 */
export function drawCopGauge(
  ctx: CanvasRenderingContext2D,
  x: number,
  y: number,
  width: number,
  height: number,
  profile: ProfileInfo,
  state: StateMessage | null,
  bar: BarSnapshot,
): void {
  const edges = [-1, ...profile.betas, 1];
  for (let i = 0; i < 5; i++) {
    const x0 = x + ((edges[i] + 1) / 2) * width;
    const x1 = x + ((edges[i + 1] + 1) / 2) * width;
    ctx.fillStyle = REGION_COLORS[i];
    ctx.globalAlpha = 0.55;
    ctx.fillRect(x0, y, x1 - x0, height);
    ctx.globalAlpha = 1.0;
  }
  ctx.strokeStyle = "#e8e8e8";
  ctx.strokeRect(x, y, width, height);
  // operator input position (local affordance)
  if (bar.engaged) {
    const bx = x + ((bar.cop + 1) / 2) * width;
    ctx.strokeStyle = "rgba(255,255,255,0.6)";
    ctx.beginPath();
    ctx.moveTo(bx, y - 4);
    ctx.lineTo(bx, y + height + 4);
    ctx.stroke();
  }
  // server-recognized cop marker
  if (state !== null) {
    const mx = x + ((state.delta + 1) / 2) * width;
    ctx.fillStyle = "#ffffff";
    ctx.beginPath();
    ctx.arc(mx, y + height / 2, Math.max(4, height * 0.22), 0, 2 * Math.PI);
    ctx.fill();
  }
}

export function regionName(delta: number, profile: ProfileInfo): string {
  const b = profile.betas;
  if (delta < b[0]) return REGION_NAMES[0];
  if (delta < b[1]) return REGION_NAMES[1];
  if (delta < b[2]) return REGION_NAMES[2];
  if (delta < b[3]) return REGION_NAMES[3];
  return REGION_NAMES[4];
}

/** Signed horizontal bar gauge for v or omega, normalized by its limit. */
export function drawDial(
  ctx: CanvasRenderingContext2D,
  x: number,
  y: number,
  width: number,
  height: number,
  value: number,
  limit: number,
  label: string,
): void {
  ctx.fillStyle = "#1c222c";
  ctx.fillRect(x, y, width, height);
  const frac = Math.max(-1, Math.min(1, value / limit));
  const mid = x + width / 2;
  ctx.fillStyle = frac >= 0 ? "#6fd36f" : "#d35454";
  if (frac >= 0) {
    ctx.fillRect(mid, y, (width / 2) * frac, height);
  } else {
    ctx.fillRect(mid + (width / 2) * frac, y, -(width / 2) * frac, height);
  }
  ctx.strokeStyle = "#e8e8e8";
  ctx.strokeRect(x, y, width, height);
  ctx.fillStyle = "#c9d2dd";
  ctx.font = "12px monospace";
  ctx.fillText(`${label} ${value.toFixed(2)}`, x + 4, y + height - 4);
}

export function formatMetrics(state: StateMessage | null): string {
  const m = state?.metrics;
  if (!m) return "metrics: —";
  return (
    `CT ${m.completion_time.toFixed(1)}s   ` +
    `Jk ${m.jerk.toFixed(3)}   Fl ${(100 * m.fluency).toFixed(1)}%`
  );
}
