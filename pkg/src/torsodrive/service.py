"""Teleoperation service: live frames in, state telemetry out, guided calibration.

`TeleopSession` is the transport-free core: a latest-wins frame mailbox, the
watchdog, the two-rate simulation engine and the calibration schedule driver,
all advanced by explicit tick() calls on a virtual clock (deterministic and
directly testable). `TeleopServer` wraps it in an aiohttp app — one WebSocket
endpoint speaking JSON messages plus a few GET endpoints — and paces ticks
against the wall clock.

Wire protocol (one JSON object per message):
  client -> server: {"type":"frame","seq":u64,"readings":[[...]]},
    {"type":"start_drive","circuit":{...}?}, {"type":"start_calibration"},
    {"type":"posture_ack"}, {"type":"pause"}
  server -> client: {"type":"state",...}, {"type":"prompt","posture":...,
    "seconds_left":n}, {"type":"calibration_result",...},
    {"type":"error","code":...,"detail":...}

The input policy is latest-wins: at most one pending frame is retained and
stale sequence numbers are dropped with a notice, so the loop always acts on
the freshest intent. If no frame arrives within the watchdog timeout the
pipeline is fed an idle frame and the command decays to zero.
"""

from __future__ import annotations

import asyncio
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from aiohttp import WSMsgType, web

from .calibration import (
    CalibrationProfile,
    CalibrationRecording,
    PostureDwell,
    calibrate,
    save_profile,
    sweep_schedule,
)
from .errors import CalibrationError, TorsoDriveError
from .intent import GainConfig, intent_tick
from .metrics import evaluate
from .sensor import PressureFrame, SensorLayout, zero_frame
from .sim import LogRecord, SimConfig, TrialLog, TwoRateLoop

Phase = Literal["idle", "calibrating", "driving", "paused"]


@dataclass(frozen=True)
class ServiceConfig:
    watchdog_timeout: float = 0.25  # s without frames before forcing idle
    telemetry_rate: float = 30.0  # Hz, state messages to the client
    dwell_seconds: float = 5.0  # per calibration posture
    rest_seconds: float = 5.0  # zero-offset recording
    metrics_refresh_seconds: float = 1.0  # live metric snapshot cadence


@dataclass
class TickEvents:
    """What one session tick produced, for the transport layer to relay."""

    record: LogRecord | None = None
    telemetry: dict | None = None
    prompts: list[dict] = field(default_factory=list)
    calibration_result: dict | None = None


class TeleopSession:
    """Single-operator teleop core advanced tick by tick on a virtual clock."""

    def __init__(
        self,
        layout: SensorLayout,
        profile: CalibrationProfile,
        gains: GainConfig | None = None,
        sim_cfg: SimConfig | None = None,
        cfg: ServiceConfig | None = None,
    ):
        self.layout = layout
        self.profile = profile
        self.gains = gains if gains is not None else GainConfig()
        self.sim_cfg = sim_cfg if sim_cfg is not None else SimConfig()
        self.cfg = cfg if cfg is not None else ServiceConfig()
        self.gains.validate_against(profile)
        self.phase: Phase = "idle"
        self.log = TrialLog()
        self.circuit: dict | None = None
        self._loop = TwoRateLoop(self.sim_cfg)
        self._tick_count = 0  # session clock, all phases
        self._drive_ticks = 0
        self._latest_frame: PressureFrame | None = None
        self._latest_seq = -1
        self._last_frame_time: float | None = None
        self._telemetry_every = max(
            1, round(self.sim_cfg.intent_rate / self.cfg.telemetry_rate)
        )
        self._metrics_every = max(
            1, round(self.sim_cfg.intent_rate * self.cfg.metrics_refresh_seconds)
        )
        self._live_metrics: dict | None = None
        self._cal: dict | None = None

    # -- clock ----------------------------------------------------------

    @property
    def sim_time(self) -> float:
        """Virtual session time; also the ingest stamp for arriving frames."""
        return self._tick_count / self.sim_cfg.intent_rate

    # -- input ------------------------------------------------------------

    def submit_frame(self, seq: int, readings) -> tuple[str, str | None]:
        """Latest-wins mailbox. Returns (status, detail) with status one of
        'ok', 'stale', 'invalid', 'rejected'."""
        if self.phase not in ("driving", "calibrating"):
            return "rejected", f"session is {self.phase}; frames need an active drive or calibration"
        if seq <= self._latest_seq:
            return "stale", f"sequence {seq} <= latest {self._latest_seq}"
        try:
            arr = np.asarray(readings, dtype=float)
        except (TypeError, ValueError):
            return "invalid", "readings must be a numeric matrix"
        if arr.shape != self.layout.shape:
            return "invalid", f"expected {self.layout.shape} readings, got {arr.shape}"
        if not np.all(np.isfinite(arr)):
            return "invalid", "readings must be finite"
        frame = PressureFrame(self.sim_time, np.clip(arr, 0.0, self.layout.sensor_max))
        self._latest_frame = frame
        self._latest_seq = seq
        self._last_frame_time = self.sim_time
        return "ok", None

    def _fresh_frame(self, now: float) -> PressureFrame:
        if (
            self._latest_frame is None
            or self._last_frame_time is None
            or now - self._last_frame_time > self.cfg.watchdog_timeout
        ):
            return zero_frame(self.layout, now)  # watchdog: decay to idle
        return self._latest_frame

    # -- phase control ------------------------------------------------------

    def start_drive(self, circuit: dict | None = None) -> tuple[bool, str | None]:
        if self.phase == "calibrating":
            return False, "calibration in progress"
        if circuit is not None:
            self.circuit = circuit
        self.phase = "driving"
        return True, None

    def pause(self) -> None:
        if self.phase == "driving":
            self.phase = "paused"

    def client_lost(self) -> None:
        """Owner vanished: abort any calibration, leave driving paused."""
        if self.phase == "calibrating":
            self._cal = None
            self.phase = "idle"
        elif self.phase == "driving":
            self.phase = "paused"

    def start_calibration(self) -> tuple[dict | None, str | None]:
        """Begin the guided schedule; returns (first prompt, error detail)."""
        if self.phase == "driving":
            return None, "pause driving before calibrating"
        if self.phase == "calibrating":
            return None, "calibration already running"
        schedule = [PostureDwell("rest", self.cfg.rest_seconds)]
        schedule += list(sweep_schedule(self.cfg.dwell_seconds))
        self._cal = {
            "schedule": schedule,
            "index": 0,
            "tick": 0,
            "buckets": [[] for _ in schedule],
            "awaiting_ack": True,
            "last_whole": None,
        }
        self.phase = "calibrating"
        return self._prompt_payload(), None

    def posture_ack(self) -> None:
        if self._cal is not None:
            self._cal["awaiting_ack"] = False

    def _prompt_payload(self) -> dict:
        cal = self._cal
        dwell = cal["schedule"][cal["index"]]
        left = dwell.seconds - cal["tick"] / self.sim_cfg.intent_rate
        return {
            "type": "prompt",
            "posture": dwell.posture,
            "seconds_left": math.ceil(left - 1e-9),
        }

    # -- ticking --------------------------------------------------------------

    def tick(self) -> TickEvents:
        """Advance the session by one intent tick of virtual time."""
        events = TickEvents()
        now = self.sim_time
        if self.phase == "driving":
            self._drive_tick(now, events)
        elif self.phase == "calibrating":
            self._calibration_tick(events)
        self._tick_count += 1
        return events

    def _drive_tick(self, now: float, events: TickEvents) -> None:
        frame = self._fresh_frame(now)
        cmd = intent_tick(frame, self.layout, self.profile, self.gains)
        state = self._loop.state
        t = self._drive_ticks / self.sim_cfg.intent_rate
        record = LogRecord(
            t=t,
            cop=cmd.cop,
            pressure=cmd.pressure,
            mode=cmd.mode,
            v_cmd=cmd.v,
            w_cmd=cmd.omega,
            v_act=state.v_act,
            w_act=state.w_act,
            x=state.x,
            y=state.y,
            theta=state.theta,
        )
        self.log.append(record)
        events.record = record
        self._loop.advance(cmd)
        self._drive_ticks += 1
        if len(self.log) >= 3 and self._drive_ticks % self._metrics_every == 0:
            m = evaluate(self.log, p_max=self.profile.p_max)
            self._live_metrics = {
                "completion_time": m.completion_time,
                "jerk": m.jerk,
                "fluency": m.fluency,
            }
        if (self._drive_ticks - 1) % self._telemetry_every == 0:
            events.telemetry = {
                "type": "state",
                "t": record.t,
                "x": record.x,
                "y": record.y,
                "theta": record.theta,
                "v_act": record.v_act,
                "w_act": record.w_act,
                "delta": record.cop,
                "P": record.pressure,
                "mode": record.mode,
                "v_cmd": record.v_cmd,
                "w_cmd": record.w_cmd,
                "phase": self.phase,
                "metrics": self._live_metrics,
            }

    def _calibration_tick(self, events: TickEvents) -> None:
        cal = self._cal
        if cal is None:
            self.phase = "idle"
            return
        if cal["awaiting_ack"]:
            # keep reminding once a second until the client confirms readiness
            if self._tick_count % self.sim_cfg.intent_rate == 0:
                events.prompts.append(self._prompt_payload())
            return
        cal["buckets"][cal["index"]].append(self._fresh_frame(self.sim_time))
        cal["tick"] += 1
        dwell = cal["schedule"][cal["index"]]
        remaining = math.ceil(
            dwell.seconds - cal["tick"] / self.sim_cfg.intent_rate - 1e-9
        )
        if cal["tick"] >= round(dwell.seconds * self.sim_cfg.intent_rate):
            cal["index"] += 1
            cal["tick"] = 0
            cal["last_whole"] = None
            if cal["index"] >= len(cal["schedule"]):
                events.calibration_result = self._finish_calibration()
                return
            events.prompts.append(self._prompt_payload())
        elif remaining != cal["last_whole"]:
            cal["last_whole"] = remaining
            events.prompts.append(self._prompt_payload())

    def _finish_calibration(self) -> dict:
        cal = self._cal
        self._cal = None
        self.phase = "idle"
        rest = cal["buckets"][0]
        frames = tuple(f for bucket in cal["buckets"][1:] for f in bucket)
        recording = CalibrationRecording(
            layout=self.layout,
            frames=frames,
            schedule=tuple(cal["schedule"][1:]),
        )
        try:
            profile = calibrate(rest, recording, p_max=self.profile.p_max)
        except CalibrationError as exc:
            detail = {"code": "calibration_failed", "detail": str(exc)}
            if hasattr(exc, "column"):
                detail["column"] = exc.column
            return {"type": "calibration_result", "ok": False, **detail}
        self.profile = profile
        return {"type": "calibration_result", "ok": True, "profile": profile.to_dict()}


class TeleopServer:
    """aiohttp wrapper: paced tick task, WebSocket endpoint, status endpoints.

    One connection owns the session (sends frames and control messages);
    later concurrent connections get read-only telemetry. When the owner
    drops, the session pauses and the next connection may take over.
    """

    def __init__(
        self,
        session: TeleopSession,
        host: str = "127.0.0.1",
        port: int = 8787,
        time_scale: float = 1.0,
        log_path: str | Path | None = None,
        profile_path: str | Path | None = None,
    ):
        if time_scale <= 0:
            raise TorsoDriveError("time_scale must be positive")
        self.session = session
        self.host = host
        self._requested_port = port
        self.time_scale = time_scale
        self.log_path = Path(log_path) if log_path else None
        # Written only when a calibration session completes successfully.
        self.profile_path = Path(profile_path) if profile_path else None
        self._owner: web.WebSocketResponse | None = None
        self._observers: set[web.WebSocketResponse] = set()
        self._runner: web.AppRunner | None = None
        self._tick_task: asyncio.Task | None = None
        self.port: int | None = None

    def _app(self) -> web.Application:
        app = web.Application()
        app.router.add_get("/health", self._handle_health)
        app.router.add_get("/profile", self._handle_profile)
        app.router.add_get("/layout", self._handle_layout)
        app.router.add_get("/log.csv", self._handle_log)
        app.router.add_get("/ws", self._handle_ws)
        return app

    async def start(self) -> None:
        self._runner = web.AppRunner(self._app())
        await self._runner.setup()
        site = web.TCPSite(self._runner, self.host, self._requested_port)
        await site.start()
        self.port = site._server.sockets[0].getsockname()[1]
        self._tick_task = asyncio.create_task(self._run_ticks())

    async def stop(self) -> None:
        if self._tick_task is not None:
            self._tick_task.cancel()
            try:
                await self._tick_task
            except asyncio.CancelledError:
                pass
        if self.log_path is not None and len(self.session.log):
            self.session.log.to_csv(self.log_path)
        if self._runner is not None:
            await self._runner.cleanup()

    async def serve_forever(self) -> None:
        await self.start()
        try:
            await asyncio.Event().wait()
        finally:
            await self.stop()

    # -- tick pacing --------------------------------------------------------

    async def _run_ticks(self) -> None:
        loop = asyncio.get_running_loop()
        period = 1.0 / (self.session.sim_cfg.intent_rate * self.time_scale)
        next_t = loop.time() + period
        while True:
            events = self.session.tick()
            await self._relay(events)
            delay = next_t - loop.time()
            next_t += period
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_t = loop.time() + period  # fell behind; re-anchor

    async def _relay(self, events: TickEvents) -> None:
        for prompt in events.prompts:
            await self._broadcast(prompt)
        if events.telemetry is not None:
            await self._broadcast(events.telemetry)
        if events.calibration_result is not None:
            if events.calibration_result.get("ok") and self.profile_path is not None:
                save_profile(self.session.profile, self.profile_path)
            await self._broadcast(events.calibration_result)

    async def _broadcast(self, payload: dict) -> None:
        text = json.dumps(payload)
        for ws in [self._owner, *self._observers]:
            if ws is not None and not ws.closed:
                try:
                    await ws.send_str(text)
                except ConnectionError:
                    pass

    # -- http ---------------------------------------------------------------

    async def _handle_health(self, request: web.Request) -> web.Response:
        return web.json_response({"status": "ok"})

    async def _handle_profile(self, request: web.Request) -> web.Response:
        return web.json_response(self.session.profile.to_dict())

    async def _handle_layout(self, request: web.Request) -> web.Response:
        return web.json_response(self.session.layout.to_dict())

    async def _handle_log(self, request: web.Request) -> web.Response:
        return web.Response(
            text=self.session.log.to_csv_text(), content_type="text/csv"
        )

    # -- websocket ------------------------------------------------------------

    async def _handle_ws(self, request: web.Request) -> web.WebSocketResponse:
        ws = web.WebSocketResponse()
        await ws.prepare(request)
        is_owner = self._owner is None or self._owner.closed
        if is_owner:
            self._owner = ws
        else:
            self._observers.add(ws)
        try:
            async for msg in ws:
                if msg.type != WSMsgType.TEXT:
                    continue
                await self._dispatch(ws, is_owner, msg.data)
        finally:
            if is_owner and self._owner is ws:
                self._owner = None
                self.session.client_lost()
            else:
                self._observers.discard(ws)
        return ws

    async def _send_error(self, ws, code: str, detail: str) -> None:
        await ws.send_str(json.dumps({"type": "error", "code": code, "detail": detail}))

    async def _dispatch(self, ws, is_owner: bool, raw: str) -> None:
        try:
            msg = json.loads(raw)
            kind = msg["type"]
        except (json.JSONDecodeError, TypeError, KeyError):
            await self._send_error(ws, "bad_message", "expected a JSON object with a type")
            return
        if not is_owner:
            await self._send_error(ws, "observer_readonly", "another client owns this session")
            return
        session = self.session
        if kind == "frame":
            try:
                status, detail = session.submit_frame(int(msg["seq"]), msg["readings"])
            except (KeyError, TypeError, ValueError):
                await self._send_error(ws, "bad_frame", "frame needs integer seq and readings matrix")
                return
            if status == "stale":
                await self._send_error(ws, "stale_frame", detail)
            elif status == "invalid":
                await self._send_error(ws, "bad_frame", detail)
            elif status == "rejected":
                await self._send_error(ws, "wrong_phase", detail)
        elif kind == "start_drive":
            ok, detail = session.start_drive(msg.get("circuit"))
            if not ok:
                await self._send_error(ws, "wrong_phase", detail)
        elif kind == "start_calibration":
            prompt, detail = session.start_calibration()
            if prompt is None:
                await self._send_error(ws, "wrong_phase", detail)
            else:
                await ws.send_str(json.dumps(prompt))
        elif kind == "posture_ack":
            session.posture_ack()
        elif kind == "pause":
            session.pause()
        else:
            await self._send_error(ws, "unknown_type", f"unknown message type {kind!r}")
