"""Scripted synthetic operator: closes the loop without a human.

Turns a desired path into posture pressure frames by inverting the intent
mapping: waypoint steering gives a desired (v, w), the inverse of the
piecewise map picks the (cop, pressure) posture that produces it, and a frame
synthesizer shapes a Gaussian press whose recognized cop/pressure match. The
default circuit weaves a figure-8 around two markers 5 m apart.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibration import (
    CalibrationProfile,
    CalibrationRecording,
    default_profile,
    sweep_schedule,
)
from .errors import TorsoDriveError
from .intent import GainConfig
from .sensor import PressureFrame, SensorLayout, normalized_positions, synth_frame, zero_frame
from .sim import FrameSource, RobotState, wrap_angle


@dataclass(frozen=True)
class Circuit:
    """Evaluation circuit: markers to weave around, lap count, arrival radius."""

    markers: tuple[tuple[float, float], ...] = ((0.0, 0.0), (5.0, 0.0))
    laps: int = 3
    waypoint_radius: float = 0.9  # m

    def __post_init__(self):
        if len(self.markers) < 2:
            raise TorsoDriveError("a circuit needs at least 2 markers")
        if self.waypoint_radius <= 0:
            raise TorsoDriveError("waypoint_radius must be positive")
        if self.laps < 0:
            raise TorsoDriveError("laps must be non-negative")
        object.__setattr__(
            self, "markers", tuple((float(x), float(y)) for x, y in self.markers)
        )

    def to_dict(self) -> dict:
        return {
            "markers_m": [list(m) for m in self.markers],
            "laps": self.laps,
            "waypoint_radius_m": self.waypoint_radius,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Circuit":
        return cls(
            markers=tuple((float(x), float(y)) for x, y in data["markers_m"]),
            laps=int(data.get("laps", 3)),
            waypoint_radius=float(data.get("waypoint_radius_m", 0.9)),
        )


def load_circuit(path: str | Path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return Circuit.from_dict(json.load(fh))


def save_circuit(circuit: Circuit, path: str | Path) -> None:
    Path(path).write_text(json.dumps(circuit.to_dict(), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class DriverConfig:
    lookahead: float = 2.0  # m, carrot-point reach along the waypoint legs
    reaction_delay: float = 0.2  # s, command-to-posture lag (0 = idealized)
    posture_noise: float = 0.01  # uniform half-range, fraction of sensor_max
    press_width: float = 0.25  # Gaussian press width on the normalized axis
    heading_gain: float = 2.0  # rad/s per rad of heading error
    orbit_radius: float = 0.7  # m, loop radius around each marker
    orbit_sense: int = 1  # +1 default handedness, -1 mirrors the eight

    def __post_init__(self):
        if self.lookahead <= 0:
            raise TorsoDriveError("lookahead must be positive")
        if self.press_width <= 0:
            raise TorsoDriveError("press_width must be positive")
        if self.orbit_sense not in (1, -1):
            raise TorsoDriveError("orbit_sense must be +1 or -1")


def figure_eight_waypoints(
    circuit: Circuit, cfg: DriverConfig
) -> tuple[list[tuple[float, float]], list[int]]:
    """Waypoint cycle weaving the 8 between the first two markers.

    Per lap: three points looping one way around the far marker, then three
    looping the other way around the near one, with the connecting legs
    crossing between the markers. A final waypoint returns to the start.
    Returns (waypoints, lap_end_indices).
    """
    a = np.asarray(circuit.markers[0], dtype=float)
    b = np.asarray(circuit.markers[1], dtype=float)
    span = b - a
    dist = float(np.hypot(*span))
    if dist <= 0:
        raise TorsoDriveError("circuit markers coincide")
    axis = span / dist
    perp = np.array([-axis[1], axis[0]]) * cfg.orbit_sense
    r = cfg.orbit_radius
    lap = [
        b - perp * r,
        b + axis * r,
        b + perp * r,
        a - perp * r,
        a - axis * r,
        a + perp * r,
    ]
    points: list[tuple[float, float]] = []
    lap_ends: list[int] = []
    for _ in range(circuit.laps):
        points.extend((float(p[0]), float(p[1])) for p in lap)
        lap_ends.append(len(points) - 1)
    if circuit.laps > 0:
        start = (a + b) / 2.0 - perp * r
        points.append((float(start[0]), float(start[1])))
    return points, lap_ends


def start_pose(circuit: Circuit, cfg: DriverConfig) -> RobotState:
    """Pose at the circuit start, heading at the first waypoint."""
    a = np.asarray(circuit.markers[0], dtype=float)
    b = np.asarray(circuit.markers[1], dtype=float)
    axis = (b - a) / float(np.hypot(*(b - a)))
    perp = np.array([-axis[1], axis[0]]) * cfg.orbit_sense
    pos = (a + b) / 2.0 - perp * cfg.orbit_radius
    first = b - perp * cfg.orbit_radius
    heading = math.atan2(first[1] - pos[1], first[0] - pos[0])
    return RobotState(x=float(pos[0]), y=float(pos[1]), theta=heading)


def steer_to_waypoint(
    state: RobotState,
    waypoint: tuple[float, float],
    gains: GainConfig,
    cfg: DriverConfig,
) -> tuple[float, float]:
    """Heading-proportional steering toward one point.

    Angular rate is proportional to the wrapped heading error (clamped at
    omega_max); translation slows with the error's cosine so sharp turns pivot
    rather than plough. The error is taken where the heading will be once the
    posture lag has elapsed (the driver anticipates its own reaction delay;
    without this, low turn-rate limits produce a spin limit cycle).
    """
    e = wrap_angle(math.atan2(waypoint[1] - state.y, waypoint[0] - state.x) - state.theta)
    e_ahead = wrap_angle(e - state.w_act * cfg.reaction_delay)
    w = min(gains.omega_max, max(-gains.omega_max, cfg.heading_gain * e_ahead))
    v = gains.v_max * max(0.0, math.cos(e))
    return v, w


def inverse_intent(
    v_d: float, w_d: float, profile: CalibrationProfile, gains: GainConfig
) -> tuple[float, float]:
    """Pick the (cop, pressure) posture whose mapped command is (v_d, w_d).

    On the half-sine ramps v/v_m + |w|/w_m is identically 1, so the press
    magnitude that realizes both components is v_d/k1 + |w_d|/k2 (clamped to
    P_max); the ramp phase then comes from inverting its half-sine in |w|.
    Ambiguous plateau requests take the plateau midpoint as the canonical
    posture; spin requests sit in the middle of the spin regions. Total by
    clamping: infeasible requests degrade to the nearest achievable command.
    """
    b1, b2, b3, b4 = profile.betas
    v_d = max(0.0, v_d)
    p = min(profile.p_max, v_d / gains.k1 + abs(w_d) / gains.k2)
    if p <= 0.0:
        return 0.0, 0.0
    if w_d == 0.0:
        return (b2 + b3) / 2.0, p
    if v_d <= 1e-9:
        cop = (-1.0 + b1) / 2.0 if w_d < 0 else (b4 + 1.0) / 2.0
        return cop, p
    wm = gains.k2 * p
    ratio = min(1.0, abs(w_d) / wm)
    if w_d < 0:
        # turn-CW ramp: |w|/wm = (1 + cos(pi t))/2 over t in [0, 1)
        t = math.acos(min(1.0, max(-1.0, 2.0 * ratio - 1.0))) / math.pi
        return b1 + t * (b2 - b1), p
    # turn-CCW ramp: |w|/wm = (1 - cos(pi u))/2 over u in [0, 1)
    u = math.acos(min(1.0, max(-1.0, 1.0 - 2.0 * ratio))) / math.pi
    return b3 + u * (b4 - b3), p


def _recognized_cop(aim: float, scaled: np.ndarray, positions: np.ndarray, inv_alphas: np.ndarray) -> float:
    """Cop the intent pipeline would report for a Gaussian press aimed at `aim`."""
    w = np.exp(-((positions - aim) ** 2) * scaled)
    num = float((w * positions).sum())
    den = float((w * inv_alphas).sum())
    return min(1.0, max(-1.0, num / den))


def drive_frame(
    cop_target: float,
    pressure: float,
    layout: SensorLayout,
    profile: CalibrationProfile,
    cfg: DriverConfig,
    rng: np.random.Generator | None = None,
    timestamp: float = 0.0,
) -> PressureFrame:
    """Synthesize a frame whose recognized (cop, pressure) approximates the target.

    Column means take a Gaussian bump pre-divided by the profile's saturation
    weights (so the weighted magnitude saturates where intended) and scaled so
    max(alpha * mean) equals `pressure`. Because the discrete column grid
    biases the recognized centroid, the bump's aim point is solved by bisection
    against the recognition formula rather than placed at the target directly.
    Seeded posture noise is added when `rng` is given.
    """
    if pressure <= 1e-12:
        return zero_frame(layout, timestamp)
    positions = normalized_positions(layout)
    inv_alphas = 1.0 / profile.alphas
    scaled = 1.0 / (2.0 * cfg.press_width * cfg.press_width)
    target = min(1.0, max(-1.0, cop_target))
    lo, hi = -4.0, 4.0
    if _recognized_cop(lo, scaled, positions, inv_alphas) >= target:
        aim = lo
    elif _recognized_cop(hi, scaled, positions, inv_alphas) <= target:
        aim = hi
    else:
        for _ in range(40):
            aim = (lo + hi) / 2.0
            if _recognized_cop(aim, scaled, positions, inv_alphas) < target:
                lo = aim
            else:
                hi = aim
        aim = (lo + hi) / 2.0
    bump = np.exp(-((positions - aim) ** 2) * scaled)
    col = bump * inv_alphas * (min(pressure, profile.p_max) / bump.max())
    readings = np.tile(col, (layout.rows, 1))
    if rng is not None and cfg.posture_noise > 0.0:
        readings = readings + rng.uniform(
            -cfg.posture_noise * layout.sensor_max,
            cfg.posture_noise * layout.sensor_max,
            size=readings.shape,
        )
    return PressureFrame(timestamp, np.clip(readings, 0.0, layout.sensor_max))


class SyntheticDriver:
    """Frame source that follows the figure-8 circuit.

    Invoked by the simulation loop once per intent tick; stateless between
    runs except the waypoint index, the reaction-delay queue and the noise
    generator. Returns None once every waypoint (and the return-to-start) has
    been visited, ending the run.
    """

    def __init__(
        self,
        layout: SensorLayout,
        profile: CalibrationProfile,
        gains: GainConfig,
        circuit: Circuit | None = None,
        cfg: DriverConfig | None = None,
        seed: int | None = 1234,
        intent_rate: int = 150,
    ):
        self.layout = layout
        self.profile = profile
        self.gains = gains
        self.circuit = circuit if circuit is not None else Circuit()
        self.cfg = cfg if cfg is not None else DriverConfig()
        self.waypoints, self._lap_ends = figure_eight_waypoints(self.circuit, self.cfg)
        self.waypoint_index = 0
        self.lap_times: list[float] = []
        self._rng = np.random.default_rng(seed) if seed is not None else None
        delay_ticks = round(self.cfg.reaction_delay * intent_rate)
        self._posture_queue: deque[tuple[float, float]] = deque(
            [(0.0, 0.0)] * delay_ticks
        )

    @property
    def done(self) -> bool:
        return self.waypoint_index >= len(self.waypoints)

    def _advance_waypoints(self, t: float, state: RobotState) -> None:
        while self.waypoint_index < len(self.waypoints):
            wx, wy = self.waypoints[self.waypoint_index]
            if math.hypot(wx - state.x, wy - state.y) > self.circuit.waypoint_radius:
                return
            if self.waypoint_index in self._lap_ends:
                self.lap_times.append(t)
            self.waypoint_index += 1

    def _steer_target(self, state: RobotState) -> tuple[float, float]:
        # Carrot point: the current waypoint, sliding continuously toward the
        # next leg once inside the lookahead. Never snaps to the next waypoint
        # outright (a discontinuous flip can livelock just outside capture).
        wx, wy = self.waypoints[self.waypoint_index]
        d = math.hypot(wx - state.x, wy - state.y)
        if d >= self.cfg.lookahead or self.waypoint_index + 1 >= len(self.waypoints):
            return (wx, wy)
        nx, ny = self.waypoints[self.waypoint_index + 1]
        seg = math.hypot(nx - wx, ny - wy)
        if seg <= 1e-9:
            return (wx, wy)
        carry = min(self.cfg.lookahead - d, seg) / seg
        return (wx + (nx - wx) * carry, wy + (ny - wy) * carry)

    def __call__(self, t: float, state: RobotState) -> PressureFrame | None:
        self._advance_waypoints(t, state)
        if self.done:
            return None
        v_d, w_d = steer_to_waypoint(state, self._steer_target(state), self.gains, self.cfg)
        posture = inverse_intent(v_d, w_d, self.profile, self.gains)
        self._posture_queue.append(posture)
        cop, pressure = self._posture_queue.popleft()
        return drive_frame(
            cop, pressure, self.layout, self.profile, self.cfg, self._rng, timestamp=t
        )


def synthetic_calibration_sweep(
    layout: SensorLayout,
    posture_cops: tuple[float, ...] = (-0.8, -0.4, 0.0, 0.4, 0.8),
    p_max: float = 1.0,
    dwell_seconds: float = 5.0,
    rest_seconds: float = 5.0,
    rate: int = 150,
    cfg: DriverConfig | None = None,
    seed: int | None = 1234,
) -> tuple[list[PressureFrame], CalibrationRecording]:
    """Scripted user performing the guided calibration protocol.

    Rest frames first (relaxed, noise only), then the ten-dwell sweep pressing
    at full intention through the given posture cops forward and back.
    Returns (rest_frames, sweep_recording).
    """
    if len(posture_cops) != 5:
        raise TorsoDriveError("the sweep visits exactly five postures")
    cfg = cfg if cfg is not None else DriverConfig()
    body = default_profile(layout, p_max)  # raw body: uniform weights
    rng = np.random.default_rng(seed) if seed is not None else None
    eta = cfg.posture_noise * layout.sensor_max
    per_dwell = max(1, round(dwell_seconds * rate))
    t = 0.0
    rest = []
    for _ in range(max(1, round(rest_seconds * rate))):
        rest.append(synth_frame(layout, 0.0, 0.0, cfg.press_width, rng=rng, noise=eta, timestamp=t))
        t += 1.0 / rate
    targets = list(posture_cops) + list(posture_cops[::-1])
    frames = []
    for target in targets:
        for _ in range(per_dwell):
            frames.append(
                drive_frame(target, p_max, layout, body, cfg, rng, timestamp=t)
            )
            t += 1.0 / rate
    recording = CalibrationRecording(
        layout=layout, frames=tuple(frames), schedule=sweep_schedule(dwell_seconds)
    )
    return rest, recording


def thumb_frame(
    layout: SensorLayout,
    amplitude: float,
    left: bool = True,
    right: bool = True,
    timestamp: float = 0.0,
) -> PressureFrame:
    """Deliberate thumb press on the bar's extreme column(s), interior untouched."""
    readings = np.zeros(layout.shape)
    if left:
        readings[:, 0] = amplitude
    if right:
        readings[:, -1] = amplitude
    return PressureFrame(timestamp, np.clip(readings, 0.0, layout.sensor_max))


def backward_scenario(
    layout: SensorLayout, amplitude: float = 0.9, duration: float = 1.5
) -> FrameSource:
    """Scripted reverse-out-of-a-dead-end: both thumbs pressed for `duration`."""

    def source(t: float, state: RobotState) -> PressureFrame | None:
        if t >= duration:
            return None
        return thumb_frame(layout, amplitude, timestamp=t)

    return source
