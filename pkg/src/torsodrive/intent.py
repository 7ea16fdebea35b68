"""Intent recognition: corrected pressure frame -> center of pressure -> velocity command.

The pipeline reduces the sensing matrix to an input pair u = (cop, pressure):
the weighted centroid of column pressures on the normalized bar axis, and the
saturated press magnitude. A piecewise map splits the cop axis at the user's
four classification points into five regions — spin CW, turn CW, straight,
turn CCW, spin CCW — blending between them with half-sine ramps so the command
is continuous. A deliberate thumb press on the bar's extreme column(s) switches
to the discrete backward mode instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np

from .errors import ProfileError, ShapeError
from .sensor import (
    PressureFrame,
    SensorLayout,
    apply_zero_offset,
    check_frame_layout,
    column_means,
    normalized_positions,
)

if TYPE_CHECKING:
    from .calibration import CalibrationProfile

Mode = Literal["forward", "backward", "idle"]
BackwardTrigger = Literal["none", "left", "right", "both"]

# Contact deadband: below this fraction of P_max (summed column means) the bar
# counts as untouched and the pipeline emits the idle sentinel.
DEFAULT_EPSILON_CONTACT = 0.02


@dataclass(frozen=True)
class IntentInput:
    """HMI input pair: center of pressure in [-1, 1] and press magnitude (raw units)."""

    cop: float
    pressure: float


@dataclass(frozen=True)
class GainConfig:
    """Proportional gains and limits mapping press magnitude to velocity.

    k1/k2 turn pressure into linear/angular speed; theta_b, theta_i and
    epsilon_contact are fractions of the profile's P_max (backward-trigger
    threshold, interior-quiet threshold, contact deadband).
    """

    k1: float = 2.0  # (m/s) per raw pressure unit
    k2: float = 3.0  # (rad/s) per raw pressure unit
    v_max: float = 2.0  # m/s
    omega_max: float = 3.0  # rad/s
    theta_b: float = 0.5
    theta_i: float = 0.2
    epsilon_contact: float = DEFAULT_EPSILON_CONTACT

    def __post_init__(self):
        for name in ("k1", "k2", "v_max", "omega_max"):
            if getattr(self, name) <= 0:
                raise ProfileError(f"{name} must be positive")
        if not 0 < self.theta_i <= self.theta_b <= 1:
            raise ProfileError("need 0 < theta_i <= theta_b <= 1")
        if self.epsilon_contact < 0:
            raise ProfileError("epsilon_contact must be non-negative")

    def validate_against(self, profile: "CalibrationProfile") -> None:
        """Full press must not command more than the robot's limits."""
        if self.k1 > self.v_max / profile.p_max * (1 + 1e-12):
            raise ProfileError(f"k1={self.k1} exceeds v_max/P_max={self.v_max / profile.p_max}")
        if self.k2 > self.omega_max / profile.p_max * (1 + 1e-12):
            raise ProfileError(
                f"k2={self.k2} exceeds omega_max/P_max={self.omega_max / profile.p_max}"
            )

    def to_dict(self) -> dict:
        return {
            "k1": self.k1,
            "k2": self.k2,
            "v_max": self.v_max,
            "omega_max": self.omega_max,
            "theta_b": self.theta_b,
            "theta_i": self.theta_i,
            "epsilon_contact": self.epsilon_contact,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GainConfig":
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class VelocityCommand:
    """Robot control vector plus the intent pair it was derived from."""

    v: float  # m/s, forward positive
    omega: float  # rad/s, counter-clockwise positive
    mode: Mode
    cop: float = 0.0
    pressure: float = 0.0


IDLE_COMMAND = VelocityCommand(0.0, 0.0, "idle")


def pressure_centroid(means: np.ndarray, positions: np.ndarray, alphas=None) -> float:
    """Weighted-numerator centroid: sum(alpha*mean*s) / sum(mean), clamped to [-1, 1].

    The denominator is deliberately the unweighted total. An all-zero frame
    maps to 0.
    """
    total = float(means.sum())
    if total <= 0.0:
        return 0.0
    weighted = means if alphas is None else alphas * means
    return float(min(1.0, max(-1.0, float(weighted @ positions) / total)))


def compute_cop(
    frame: PressureFrame,
    layout: SensorLayout,
    profile: "CalibrationProfile",
    epsilon_contact: float | None = None,
) -> IntentInput:
    """Reduce a corrected frame to (cop, pressure).

    pressure = max_i(alpha_i * mean_i) clamped to [0, P_max], so the per-user
    saturation weights take effect on magnitude (with uniform weights this is
    the plain column max). If the summed column means fall below the contact
    deadband, returns the idle sentinel (0, 0).
    """
    check_frame_layout(frame, layout)
    if len(profile.alphas) != layout.columns:
        raise ShapeError(
            f"profile has {len(profile.alphas)} weights for {layout.columns} columns"
        )
    means = column_means(frame)
    eps = DEFAULT_EPSILON_CONTACT if epsilon_contact is None else epsilon_contact
    if float(means.sum()) < eps * profile.p_max:
        return IntentInput(0.0, 0.0)
    s = normalized_positions(layout)
    cop = pressure_centroid(means, s, profile.alphas)
    pressure = float(min(profile.p_max, max(0.0, float((profile.alphas * means).max()))))
    return IntentInput(cop, pressure)


def map_velocity(
    intent: IntentInput, profile: "CalibrationProfile", gains: GainConfig
) -> VelocityCommand:
    """Piecewise cop->velocity map over the profile's classification points.

    Magnitudes scale with pressure: v_m = k1*P and w_m = k2*P, clamped to the
    robot limits. Over cop regions split at b1..b4:

        cop < b1        spin CW        (0, -w_m)
        [b1, b2)        half-sine ramps: v 0 -> v_m, omega -w_m -> 0
        [b2, b3)        straight plateau (v_m, 0)
        [b3, b4)        half-sine ramps: v v_m -> 0, omega 0 -> +w_m
        cop >= b4       spin CCW       (0, +w_m)

    The rising v ramp on [b1, b2) uses phase -pi/2 over (b2 - b1) so it starts
    at 0 and meets the plateau at v_m, keeping v continuous across all region
    boundaries; the other three half-sine ramps already meet their neighbors.
    """
    b1, b2, b3, b4 = profile.betas
    if not (-1.0 < b1 < b2 < b3 < b4 < 1.0):
        raise ProfileError(f"classification points must be strictly ordered in (-1, 1): {profile.betas}")
    p = min(profile.p_max, max(0.0, intent.pressure))
    if p <= 0.0:
        return VelocityCommand(0.0, 0.0, "idle", intent.cop, 0.0)
    vm = min(gains.k1 * p, gains.v_max)
    wm = min(gains.k2 * p, gains.omega_max)
    d = min(1.0, max(-1.0, intent.cop))

    if d < b1:
        v, w = 0.0, -wm
    elif d < b2:
        v = vm / 2 + vm / 2 * math.sin(math.pi / (b2 - b1) * (d - b1) - math.pi / 2)
        w = -wm / 2 - wm / 2 * math.sin(math.pi / (b1 - b2) * (d - b1) + math.pi / 2)
    elif d < b3:
        v, w = vm, 0.0
    elif d < b4:
        v = vm / 2 + vm / 2 * math.sin(math.pi / (b4 - b3) * (d - b3) + math.pi / 2)
        w = wm / 2 + wm / 2 * math.sin(math.pi / (b4 - b3) * (d - b4) + math.pi / 2)
    else:
        v, w = 0.0, wm
    return VelocityCommand(v, w, "forward", d, p)


def detect_backward(
    frame: PressureFrame,
    layout: SensorLayout,
    profile: "CalibrationProfile",
    theta_b: float = 0.5,
    theta_i: float = 0.2,
) -> BackwardTrigger:
    """Detect the deliberate thumb press on the bar's extreme column(s).

    Fires when an extreme column's weighted mean exceeds theta_b * P_max while
    every interior column stays below theta_i * P_max; a body press always
    spreads onto interior columns and therefore never triggers. Layouts with
    fewer than 3 columns have no interior and never trigger.
    """
    check_frame_layout(frame, layout)
    if layout.columns < 3:
        return "none"
    weighted = profile.alphas * column_means(frame)
    if np.any(weighted[1:-1] >= theta_i * profile.p_max):
        return "none"
    thr = theta_b * profile.p_max
    left = weighted[0] > thr
    right = weighted[-1] > thr
    if left and right:
        return "both"
    if left:
        return "left"
    if right:
        return "right"
    return "none"


def backward_command(
    frame: PressureFrame,
    layout: SensorLayout,
    profile: "CalibrationProfile",
    gains: GainConfig,
    trigger: BackwardTrigger,
    cop: float = 0.0,
) -> VelocityCommand:
    """Reverse command for an active thumb trigger.

    Speed is proportional to the pressed extreme's weighted mean; both thumbs
    reverse straight, a single thumb reverses while turning away from the
    pressed side (left thumb -> +omega).
    """
    weighted = profile.alphas * column_means(frame)
    if trigger == "both":
        p_rev = max(float(weighted[0]), float(weighted[-1]))
    elif trigger == "left":
        p_rev = float(weighted[0])
    else:
        p_rev = float(weighted[-1])
    p_rev = min(profile.p_max, max(0.0, p_rev))
    v = -min(gains.k1 * p_rev, gains.v_max)
    if trigger == "both":
        w = 0.0
    else:
        w = min(gains.k2 * p_rev, gains.omega_max)
        w = w if trigger == "left" else -w
    return VelocityCommand(v, w, "backward", cop, p_rev)


def intent_tick(
    frame: PressureFrame,
    layout: SensorLayout,
    profile: "CalibrationProfile",
    gains: GainConfig,
) -> VelocityCommand:
    """One pass of the recognition pipeline on a raw frame.

    Applies the profile's zero offsets, checks the backward gesture (which
    overrides the forward mapping), then maps cop/pressure to a command.
    """
    corrected = apply_zero_offset(frame, profile.zero_offsets)
    trigger = detect_backward(
        corrected, layout, profile, theta_b=gains.theta_b, theta_i=gains.theta_i
    )
    user_input = compute_cop(
        corrected, layout, profile, epsilon_contact=gains.epsilon_contact
    )
    if trigger != "none":
        return backward_command(corrected, layout, profile, gains, trigger, user_input.cop)
    return map_velocity(user_input, profile, gains)
