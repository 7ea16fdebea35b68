// WebSocket client for the teleop service. Holds no authoritative state: it
// caches the latest server-reported values so a reload can reattach and render
// identically from telemetry alone.

import {
  ClientMessage,
  ErrorMessage,
  CalibrationResultMessage,
  PromptMessage,
  SequenceCounter,
  ServerMessage,
  StateMessage,
  encodeMessage,
  parseServerMessage,
} from "./protocol.js";

export interface ClientHandlers {
  onState?: (msg: StateMessage) => void;
  onPrompt?: (msg: PromptMessage) => void;
  onResult?: (msg: CalibrationResultMessage) => void;
  onError?: (msg: ErrorMessage) => void;
  onClose?: () => void;
}

type WebSocketCtor = new (url: string) => WebSocket;

export class TeleopClient {
  readonly url: string;
  lastState: StateMessage | null = null;
  private ws: WebSocket | null = null;
  private readonly seq = new SequenceCounter();
  private readonly handlers: ClientHandlers;
  private readonly wsCtor: WebSocketCtor;

  constructor(url: string, handlers: ClientHandlers = {}, wsCtor?: WebSocketCtor) {
    this.url = url;
    this.handlers = handlers;
    this.wsCtor = wsCtor ?? (globalThis.WebSocket as WebSocketCtor);
    if (!this.wsCtor) throw new Error("no WebSocket implementation available");
  }

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const ws = new this.wsCtor(this.url);
      this.ws = ws;
      ws.onopen = () => resolve();
      ws.onerror = () => reject(new Error(`cannot reach ${this.url}`));
      ws.onmessage = (ev: MessageEvent) => this.dispatch(String(ev.data));
      ws.onclose = () => this.handlers.onClose?.();
    });
  }

  get connected(): boolean {
    return this.ws !== null && this.ws.readyState === 1; // OPEN
  }

  private dispatch(raw: string): void {
    const msg: ServerMessage | null = parseServerMessage(raw);
    if (msg === null) return;
    switch (msg.type) {
      case "state":
        this.lastState = msg;
        this.handlers.onState?.(msg);
        break;
      case "prompt":
        this.handlers.onPrompt?.(msg);
        break;
      case "calibration_result":
        this.handlers.onResult?.(msg);
        break;
      case "error":
        this.handlers.onError?.(msg);
        break;
    }
  }

  send(msg: ClientMessage): void {
    if (!this.connected) return;
    this.ws!.send(encodeMessage(msg));
  }

  /** Frame with the next sequence number; call at >= 30 Hz while engaged. */
  sendFrame(readings: number[][]): number {
    const seq = this.seq.next();
    this.send({ type: "frame", seq, readings });
    return seq;
  }

  startDrive(circuit?: import("./protocol.js").CircuitSpec | null): void {
    this.send({ type: "start_drive", circuit: circuit ?? null });
  }

  startCalibration(): void {
    this.send({ type: "start_calibration" });
  }

  postureAck(): void {
    this.send({ type: "posture_ack" });
  }

  pause(): void {
    this.send({ type: "pause" });
  }

  close(): void {
    this.ws?.close();
    this.ws = null;
  }
}
