// Wire protocol shared with the teleop service: UTF-8 JSON, one object per
// message, client frames carrying a monotonically increasing sequence number.

export interface LayoutInfo {
  columns: number;
  rows: number;
  column_positions_mm: number[];
  sensor_max: number;
  variant_tag: string;
}

export interface ProfileInfo {
  version: number;
  zero_offsets: number[];
  alphas: number[];
  p_max: number;
  betas: [number, number, number, number];
  posture_cops: number[] | null;
  layout_hash: string;
}

export interface CircuitSpec {
  markers_m: [number, number][];
  laps: number;
  waypoint_radius_m: number;
}

export interface FrameMessage {
  type: "frame";
  seq: number;
  readings: number[][];
}

export interface StartDriveMessage {
  type: "start_drive";
  circuit?: CircuitSpec | null;
}

export interface StartCalibrationMessage {
  type: "start_calibration";
}

export interface PostureAckMessage {
  type: "posture_ack";
}

export interface PauseMessage {
  type: "pause";
}

export type ClientMessage =
  | FrameMessage
  | StartDriveMessage
  | StartCalibrationMessage
  | PostureAckMessage
  | PauseMessage;

export interface LiveMetrics {
  completion_time: number;
  jerk: number;
  fluency: number;
}

export interface StateMessage {
  type: "state";
  t: number;
  x: number;
  y: number;
  theta: number;
  v_act: number;
  w_act: number;
  delta: number;
  P: number;
  mode: string;
  v_cmd: number;
  w_cmd: number;
  phase: string;
  metrics: LiveMetrics | null;
}

export interface PromptMessage {
  type: "prompt";
  posture: string;
  seconds_left: number;
}

export interface CalibrationResultMessage {
  type: "calibration_result";
  ok: boolean;
  profile?: ProfileInfo;
  code?: string;
  detail?: string;
  column?: number;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  detail: string;
}

export type ServerMessage =
  | StateMessage
  | PromptMessage
  | CalibrationResultMessage
  | ErrorMessage;

const SERVER_TYPES = new Set(["state", "prompt", "calibration_result", "error"]);

/** Parse one incoming message; null for anything that is not ours. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const type = (data as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) return null;
  return data as ServerMessage;
}

export function encodeMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

/** Monotone sequence numbers for outgoing frames (one counter per session). */
export class SequenceCounter {
  private value = 0;

  next(): number {
    this.value += 1;
    return this.value;
  }

  get current(): number {
    return this.value;
  }
}
