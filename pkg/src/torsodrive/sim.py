"""Deterministic two-rate simulator of the differential-drive standing vehicle.

Intent recognition reruns at the sensing rate (150 Hz default) while the
kinematics integrate at the motion-constraint rate (500 Hz default), holding
the latest command in between (zero-order hold). Both rates are scheduled
exactly on their least-common-multiple grid, so a simulated second contains
exactly intent_rate command recomputations and kinematics_rate integration
steps with no drift. The in-wheel motor control loop is abstracted as a
first-order velocity lag with acceleration clamps.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from math import lcm
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .calibration import CalibrationProfile
from .errors import SimulationFault, TorsoDriveError
from .intent import GainConfig, VelocityCommand, intent_tick
from .sensor import PressureFrame, SensorLayout


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = a % (2.0 * math.pi)
    return w - 2.0 * math.pi if w > math.pi else w


@dataclass(frozen=True)
class RobotState:
    """World-frame pose and actual (tracked) body velocities."""

    x: float = 0.0  # m
    y: float = 0.0  # m
    theta: float = 0.0  # rad, wrapped to (-pi, pi]
    v_act: float = 0.0  # m/s
    w_act: float = 0.0  # rad/s
    t: float = 0.0  # s


@dataclass(frozen=True)
class SimConfig:
    intent_rate: int = 150  # Hz, sensing + intent recognition
    kinematics_rate: int = 500  # Hz, motion constraints and integration
    accel_limit: float = 3.0  # m/s^2
    alpha_limit: float = 8.0  # rad/s^2
    velocity_lag: float = 0.1  # s, first-order tracking of commands

    def __post_init__(self):
        if self.intent_rate <= 0 or self.kinematics_rate <= 0:
            raise TorsoDriveError("rates must be positive")
        if int(self.intent_rate) != self.intent_rate or int(self.kinematics_rate) != self.kinematics_rate:
            raise TorsoDriveError("rates must be integer Hz for exact scheduling")
        if self.kinematics_rate < self.intent_rate:
            raise TorsoDriveError("kinematics_rate must be at least intent_rate")
        if self.accel_limit <= 0 or self.alpha_limit <= 0:
            raise TorsoDriveError("acceleration limits must be positive")
        if self.velocity_lag < 0:
            raise TorsoDriveError("velocity_lag must be non-negative")

    def to_dict(self) -> dict:
        return {
            "intent_rate": self.intent_rate,
            "kinematics_rate": self.kinematics_rate,
            "accel_limit": self.accel_limit,
            "alpha_limit": self.alpha_limit,
            "velocity_lag": self.velocity_lag,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        return cls(
            intent_rate=int(data.get("intent_rate", 150)),
            kinematics_rate=int(data.get("kinematics_rate", 500)),
            accel_limit=float(data.get("accel_limit", 3.0)),
            alpha_limit=float(data.get("alpha_limit", 8.0)),
            velocity_lag=float(data.get("velocity_lag", 0.1)),
        )


def step_kinematics(
    state: RobotState, cmd: VelocityCommand, dt: float, cfg: SimConfig
) -> RobotState:
    """One unicycle integration step with lag and acceleration clamps.

    The actual velocities close on the commanded ones through a first-order
    lag (exact discretization, so any dt/lag ratio is stable; lag 0 tracks
    instantly), then the per-step change is clamped by the acceleration
    limits. Pose integrates with the updated velocities.
    """
    for val in (state.x, state.y, state.theta, state.v_act, state.w_act, cmd.v, cmd.omega):
        if not math.isfinite(val):
            raise SimulationFault(f"non-finite simulation input at t={state.t}")
    blend = 1.0 if cfg.velocity_lag <= 0.0 else 1.0 - math.exp(-dt / cfg.velocity_lag)
    dv = (cmd.v - state.v_act) * blend
    dw = (cmd.omega - state.w_act) * blend
    max_dv = cfg.accel_limit * dt
    max_dw = cfg.alpha_limit * dt
    dv = min(max_dv, max(-max_dv, dv))
    dw = min(max_dw, max(-max_dw, dw))
    v = state.v_act + dv
    w = state.w_act + dw
    return RobotState(
        x=state.x + v * math.cos(state.theta) * dt,
        y=state.y + v * math.sin(state.theta) * dt,
        theta=wrap_angle(state.theta + w * dt),
        v_act=v,
        w_act=w,
        t=state.t + dt,
    )


CSV_HEADER = "t,delta,P,mode,v_cmd,w_cmd,v_act,w_act,x,y,theta"
_CSV_FIELDS = (
    "t", "cop", "pressure", "mode", "v_cmd", "w_cmd",
    "v_act", "w_act", "x", "y", "theta",
)


@dataclass(frozen=True)
class LogRecord:
    """One intent tick: recognized input, command, and the state it acted on."""

    t: float
    cop: float
    pressure: float
    mode: str
    v_cmd: float
    w_cmd: float
    v_act: float
    w_act: float
    x: float
    y: float
    theta: float


class TrialLog:
    """Per-tick record stream of one run; serializes to the trial CSV format."""

    def __init__(self, records: Sequence[LogRecord] | None = None):
        self.records: list[LogRecord] = list(records or [])

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[LogRecord]:
        return iter(self.records)

    def append(self, record: LogRecord) -> None:
        self.records.append(record)

    def column(self, field: str) -> np.ndarray:
        """One record field across the run, as an array (mode as object dtype)."""
        if field == "mode":
            return np.array([r.mode for r in self.records], dtype=object)
        return np.array([getattr(r, field) for r in self.records], dtype=float)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in self.records:
            cells = []
            for name in _CSV_FIELDS:
                value = getattr(r, name)
                cells.append(value if name == "mode" else format(value, ".9g"))
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()

    def to_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text())

    @classmethod
    def from_csv_text(cls, text: str) -> "TrialLog":
        lines = [ln for ln in text.strip().splitlines() if ln]
        if not lines or lines[0] != CSV_HEADER:
            raise TorsoDriveError(f"not a trial log (expected header {CSV_HEADER!r})")
        records = []
        for ln in lines[1:]:
            cells = ln.split(",")
            if len(cells) != len(_CSV_FIELDS):
                raise TorsoDriveError(f"malformed log row: {ln!r}")
            kwargs = {}
            for name, cell in zip(_CSV_FIELDS, cells):
                kwargs[name] = cell if name == "mode" else float(cell)
            records.append(LogRecord(**kwargs))
        return cls(records)

    @classmethod
    def from_csv(cls, path: str | Path) -> "TrialLog":
        return cls.from_csv_text(Path(path).read_text())


# A frame source is polled once per intent tick with the tick time and the
# current state; returning None ends the run cleanly.
FrameSource = Callable[[float, RobotState], PressureFrame | None]


class TwoRateLoop:
    """Exact interleaving of intent ticks and kinematics steps on the LCM grid."""

    def __init__(self, cfg: SimConfig, initial_state: RobotState | None = None):
        self.cfg = cfg
        self.state = initial_state if initial_state is not None else RobotState()
        base = lcm(int(cfg.intent_rate), int(cfg.kinematics_rate))
        self._intent_every = base // int(cfg.intent_rate)
        self._kin_every = base // int(cfg.kinematics_rate)
        self._kin_dt = 1.0 / cfg.kinematics_rate
        self._base_index = 0

    @property
    def tick_time(self) -> float:
        """Simulated time of the next intent tick."""
        return self._base_index // self._intent_every / self.cfg.intent_rate

    def advance(self, cmd: VelocityCommand) -> None:
        """Integrate through one intent interval holding `cmd` (zero-order hold)."""
        for idx in range(self._base_index, self._base_index + self._intent_every):
            if idx % self._kin_every == 0:
                self.state = step_kinematics(self.state, cmd, self._kin_dt, self.cfg)
        self._base_index += self._intent_every


def run_loop(
    frame_source: FrameSource,
    layout: SensorLayout,
    profile: CalibrationProfile,
    gains: GainConfig,
    cfg: SimConfig,
    duration: float,
    initial_state: RobotState | None = None,
) -> TrialLog:
    """Closed-loop run: sample frames, recompute commands, integrate kinematics.

    One log record is appended per intent tick, carrying the state as of the
    tick time (before that interval's integration). Fully deterministic given
    a deterministic frame source.
    """
    gains.validate_against(profile)
    loop = TwoRateLoop(cfg, initial_state)
    log = TrialLog()
    n_ticks = round(duration * cfg.intent_rate)
    for k in range(n_ticks):
        t = k / cfg.intent_rate
        state = loop.state
        frame = frame_source(t, state)
        if frame is None:
            break
        cmd = intent_tick(frame, layout, profile, gains)
        log.append(
            LogRecord(
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
        )
        loop.advance(cmd)
    return log
