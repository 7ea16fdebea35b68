// Browser entry point: wires the virtual bar, the teleop client, the wizard
// and the canvas renderers to the DOM. The server named in ?server=host:port
// (default: the page's own host) is authoritative for everything displayed.

import { VirtualBar } from "./bar.js";
import { TeleopClient } from "./client.js";
import {
  CircuitSpec,
  LayoutInfo,
  ProfileInfo,
  StateMessage,
} from "./protocol.js";
import {
  SceneData,
  TrailPoint,
  drawCircuitView,
  drawCopGauge,
  drawDial,
  formatMetrics,
  regionName,
} from "./scene.js";
import { CalibrationWizard, postureLabel } from "./wizard.js";

const FRAME_RATE_HZ = 30;
const TRAIL_LIMIT = 4000;

const DEFAULT_CIRCUIT: CircuitSpec = {
  markers_m: [
    [0, 0],
    [5, 0],
  ],
  laps: 3,
  waypoint_radius_m: 0.9,
};

function serverBase(): string {
  const q = new URLSearchParams(window.location.search).get("server");
  return q ?? window.location.host;
}

async function fetchJson<T>(url: string): Promise<T> {
  const resp = await fetch(url);
  if (!resp.ok) throw new Error(`${url}: HTTP ${resp.status}`);
  return (await resp.json()) as T;
}

class App {
  private layout!: LayoutInfo;
  private profile!: ProfileInfo;
  private bar!: VirtualBar;
  private client: TeleopClient | null = null;
  private readonly wizard = new CalibrationWizard();
  private trail: TrailPoint[] = [];
  private circuit = DEFAULT_CIRCUIT;
  private connection = "disconnected";
  private statusLine = "";
  private frameTimer: number | null = null;

  private readonly circuitCanvas = el<HTMLCanvasElement>("circuit");
  private readonly gaugeCanvas = el<HTMLCanvasElement>("gauges");
  private readonly barCanvas = el<HTMLCanvasElement>("bar");
  private readonly statusEl = el<HTMLElement>("status");
  private readonly metricsEl = el<HTMLElement>("metrics");
  private readonly wizardEl = el<HTMLElement>("wizard");

  async start(): Promise<void> {
    const base = serverBase();
    this.layout = await fetchJson<LayoutInfo>(`http://${base}/layout`);
    this.profile = await fetchJson<ProfileInfo>(`http://${base}/profile`);
    this.bar = new VirtualBar(this.layout);
    await this.connect(base);
    this.bindInput();
    this.bindButtons();
    this.startFrameSender();
    const render = () => {
      this.render();
      window.requestAnimationFrame(render);
    };
    window.requestAnimationFrame(render);
  }

  private async connect(base: string): Promise<void> {
    this.client?.close();
    this.client = new TeleopClient(`ws://${base}/ws`, {
      onState: (msg) => this.onState(msg),
      onPrompt: (msg) => {
        this.wizard.onPrompt(msg);
        this.updateWizardPanel();
      },
      onResult: async (msg) => {
        this.wizard.onResult(msg);
        if (msg.ok) {
          this.profile = await fetchJson<ProfileInfo>(`http://${base}/profile`);
        }
        this.updateWizardPanel();
      },
      onError: (msg) => {
        this.statusLine = `${msg.code}: ${msg.detail}`;
      },
      onClose: () => {
        this.connection = "disconnected";
        // reattach: server state is authoritative, rendering resumes from
        // the telemetry stream as soon as the socket is back
        window.setTimeout(() => {
          this.connect(base).catch(() => undefined);
        }, 500);
      },
    });
    await this.client.connect();
    this.connection = "connected";
  }

  private onState(msg: StateMessage): void {
    this.trail.push({ x: msg.x, y: msg.y });
    if (this.trail.length > TRAIL_LIMIT) this.trail.shift();
  }

  private bindInput(): void {
    const canvas = this.barCanvas;
    const toBar = (ev: PointerEvent): [number, number] => {
      const rect = canvas.getBoundingClientRect();
      const s = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
      const depth = (ev.clientY - rect.top) / rect.height;
      return [s, depth];
    };
    canvas.addEventListener("pointerdown", (ev) => {
      canvas.setPointerCapture(ev.pointerId);
      const [s, depth] = toBar(ev);
      this.bar.pointerPress(s, depth);
    });
    canvas.addEventListener("pointermove", (ev) => {
      if (ev.buttons === 0) return;
      const [s, depth] = toBar(ev);
      this.bar.pointerPress(s, depth);
    });
    const up = () => this.bar.pointerRelease();
    canvas.addEventListener("pointerup", up);
    canvas.addEventListener("pointercancel", up);
    window.addEventListener("keydown", (ev) => {
      if (this.bar.keyDown(ev.code)) ev.preventDefault();
    });
    window.addEventListener("keyup", (ev) => {
      if (this.bar.keyUp(ev.code)) ev.preventDefault();
    });
  }

  private bindButtons(): void {
    el<HTMLButtonElement>("btn-drive").addEventListener("click", () => {
      this.trail = [];
      this.client?.startDrive(this.circuit);
    });
    el<HTMLButtonElement>("btn-pause").addEventListener("click", () => {
      this.client?.pause();
    });
    el<HTMLButtonElement>("btn-calibrate").addEventListener("click", () => {
      this.wizard.begin();
      this.client?.startCalibration();
      this.updateWizardPanel();
    });
    el<HTMLButtonElement>("btn-ready").addEventListener("click", () => {
      this.wizard.confirmReady();
      this.client?.postureAck();
      this.updateWizardPanel();
    });
    el<HTMLButtonElement>("btn-dismiss").addEventListener("click", () => {
      this.wizard.dismiss();
      this.updateWizardPanel();
    });
  }

  /** Emit frames at a steady rate; an untouched bar still sends explicit
   * idle frames so stopping is input-driven, not just watchdog-driven. */
  private startFrameSender(): void {
    if (this.frameTimer !== null) window.clearInterval(this.frameTimer);
    this.frameTimer = window.setInterval(() => {
      this.client?.sendFrame(this.bar.readings());
    }, 1000 / FRAME_RATE_HZ);
  }

  private updateWizardPanel(): void {
    const view = this.wizard.state;
    const ready = el<HTMLButtonElement>("btn-ready");
    const dismiss = el<HTMLButtonElement>("btn-dismiss");
    ready.hidden = view.phase !== "waiting_ack";
    dismiss.hidden = view.phase !== "succeeded" && view.phase !== "failed";
    switch (view.phase) {
      case "inactive":
        this.wizardEl.textContent = "";
        break;
      case "waiting_ack":
        this.wizardEl.textContent = "Calibration armed — press Ready to begin.";
        break;
      case "running":
        this.wizardEl.textContent = view.posture
          ? `${postureLabel(view.posture)} — ${view.secondsLeft}s`
          : "…";
        break;
      case "succeeded":
        this.wizardEl.textContent =
          "Calibration accepted. Classification points: " +
          (view.betas ?? []).map((b) => b.toFixed(3)).join(", ");
        break;
      case "failed":
        this.wizardEl.textContent = `Calibration failed: ${view.error}`;
        break;
    }
  }

  private render(): void {
    const state = this.client?.lastState ?? null;
    const view = this.wizard.state;
    if (view.phase === "running" && view.posture) {
      this.wizardEl.textContent = `${postureLabel(view.posture)} — ${view.secondsLeft}s`;
    }
    const scene: SceneData = {
      layout: this.layout,
      profile: this.profile,
      circuit: this.circuit,
      state,
      trail: this.trail,
      bar: this.bar.snapshot(),
      phase: state?.phase ?? "idle",
      connection: this.connection,
    };
    const cctx = this.circuitCanvas.getContext("2d")!;
    drawCircuitView(cctx, this.circuitCanvas.width, this.circuitCanvas.height, scene);

    const gctx = this.gaugeCanvas.getContext("2d")!;
    gctx.clearRect(0, 0, this.gaugeCanvas.width, this.gaugeCanvas.height);
    drawCopGauge(gctx, 20, 16, this.gaugeCanvas.width - 40, 28, this.profile, state, scene.bar);
    drawDial(gctx, 20, 60, this.gaugeCanvas.width - 40, 22, state?.v_cmd ?? 0, 2.0, "v cmd");
    drawDial(gctx, 20, 90, this.gaugeCanvas.width - 40, 22, state?.w_cmd ?? 0, 3.0, "w cmd");

    const bctx = this.barCanvas.getContext("2d")!;
    this.renderBarWidget(bctx);

    const mode = state?.mode ?? "—";
    const region = state ? regionName(state.delta, this.profile) : "—";
    this.statusEl.textContent =
      `${this.connection} | phase ${state?.phase ?? "idle"} | mode ${mode} ` +
      `| region ${region} | δ ${(state?.delta ?? 0).toFixed(3)} ` +
      `| P ${(state?.P ?? 0).toFixed(2)} ${this.statusLine ? "| " + this.statusLine : ""}`;
    this.metricsEl.textContent = formatMetrics(state);
  }

  private renderBarWidget(ctx: CanvasRenderingContext2D): void {
    const w = this.barCanvas.width;
    const h = this.barCanvas.height;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#141a22";
    ctx.fillRect(0, 0, w, h);
    const readings = this.bar.readings()[0];
    const n = readings.length;
    const colW = w / n;
    for (let i = 0; i < n; i++) {
      const level = readings[i] / this.layout.sensor_max;
      ctx.fillStyle = `rgba(111, 179, 211, ${0.15 + 0.85 * level})`;
      ctx.fillRect(i * colW + 2, h - level * (h - 8) - 4, colW - 4, level * (h - 8));
      ctx.strokeStyle = "#2a3440";
      ctx.strokeRect(i * colW + 2, 4, colW - 4, h - 8);
    }
  }
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

window.addEventListener("DOMContentLoaded", () => {
  new App().start().catch((err) => {
    const status = document.getElementById("status");
    if (status) status.textContent = `startup failed: ${err}`;
  });
});
