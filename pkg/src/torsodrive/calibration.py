"""Per-user calibration: zero offsets, saturation weights, classification points.

The guided sweep walks the user from the spin-CW posture to spin-CCW and back,
dwelling at five postures each way (ten dwells total, five seconds each by
default). From the recording we derive, per column, the weight that makes a
full press saturate at P_max, and from the per-sample centers of pressure the
four classification points that split the cop axis into this user's control
regions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CalibrationError, ProfileError, UncoveredColumnError
from .intent import pressure_centroid
from .sensor import (
    PressureFrame,
    SensorLayout,
    apply_zero_offset,
    column_means,
    layout_hash,
    normalized_positions,
)

PROFILE_VERSION = 1

POSTURES = ("spin_cw", "turn_cw", "straight", "turn_ccw", "spin_ccw")

# A column whose top-decile mean never exceeds this fraction of P_max counts
# as unpressed: its weight would amplify noise by 1/fraction or worse.
UNCOVERED_FRACTION = 0.1

# Fraction of each dwell discarded as transition transient.
DEFAULT_TRANSIENT_FRACTION = 0.1


@dataclass(frozen=True)
class CalibrationProfile:
    """Per-user sensing profile.

    zero_offsets: resting reading per sensor (rows x columns, raw units).
    alphas: per-column saturation weights (alpha_i * peak mean = P_max).
    betas: the four classification points, strictly ordered in (-1, 1).
    posture_cops: the five recovered posture centers (diagnostics).
    """

    zero_offsets: np.ndarray
    alphas: np.ndarray
    p_max: float
    betas: tuple[float, float, float, float]
    posture_cops: tuple[float, float, float, float, float] | None = None
    layout_hash: str = ""

    def __post_init__(self):
        off = np.asarray(self.zero_offsets, dtype=float)
        if off.ndim != 2:
            raise ProfileError("zero_offsets must be a rows x columns matrix")
        al = np.asarray(self.alphas, dtype=float)
        if al.ndim != 1 or al.shape[0] != off.shape[1]:
            raise ProfileError("alphas must be one weight per column")
        if np.any(al <= 0):
            raise ProfileError("all alphas must be positive")
        if self.p_max <= 0:
            raise ProfileError("p_max must be positive")
        b = tuple(float(v) for v in self.betas)
        if len(b) != 4 or not (-1.0 < b[0] < b[1] < b[2] < b[3] < 1.0):
            raise ProfileError(f"betas must be strictly ordered inside (-1, 1), got {b}")
        if self.posture_cops is not None:
            cops = tuple(float(v) for v in self.posture_cops)
            if len(cops) != 5:
                raise ProfileError("expected five posture cops")
            for k in range(4):
                mid = (cops[k] + cops[k + 1]) / 2.0
                if not math.isclose(mid, b[k], rel_tol=0, abs_tol=1e-9):
                    raise ProfileError(
                        f"beta_{k + 1}={b[k]} is not the midpoint of posture cops "
                        f"{cops[k]}, {cops[k + 1]}"
                    )
            object.__setattr__(self, "posture_cops", cops)
        object.__setattr__(self, "zero_offsets", off)
        object.__setattr__(self, "alphas", al)
        object.__setattr__(self, "betas", b)

    def to_dict(self) -> dict:
        return {
            "version": PROFILE_VERSION,
            "zero_offsets": [float(v) for v in self.zero_offsets.ravel()],
            "alphas": [float(v) for v in self.alphas],
            "p_max": self.p_max,
            "betas": list(self.betas),
            "posture_cops": list(self.posture_cops) if self.posture_cops else None,
            "layout_hash": self.layout_hash,
        }


def default_profile(layout: SensorLayout, p_max: float = 1.0) -> CalibrationProfile:
    """Uncalibrated profile: no offsets, uniform weights, symmetric regions."""
    return CalibrationProfile(
        zero_offsets=np.zeros(layout.shape),
        alphas=np.ones(layout.columns),
        p_max=p_max,
        betas=(-0.6, -0.2, 0.2, 0.6),
        posture_cops=(-0.8, -0.4, 0.0, 0.4, 0.8),
        layout_hash=layout_hash(layout),
    )


def save_profile(profile: CalibrationProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile.to_dict(), indent=2, sort_keys=True) + "\n")


def load_profile(path: str | Path, layout: SensorLayout | None = None) -> CalibrationProfile:
    """Load a profile file; with a layout given, shape and hash are verified."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("version") != PROFILE_VERSION:
        raise ProfileError(f"unsupported profile version {data.get('version')!r}")
    offsets = np.asarray(data["zero_offsets"], dtype=float)
    if layout is not None:
        if offsets.size != layout.rows * layout.columns:
            raise ProfileError("profile offsets do not match the layout dimensions")
        offsets = offsets.reshape(layout.shape)
        if data.get("layout_hash") and data["layout_hash"] != layout_hash(layout):
            raise ProfileError("profile was calibrated for a different layout")
    else:
        offsets = offsets.reshape(1, -1)
    cops = data.get("posture_cops")
    return CalibrationProfile(
        zero_offsets=offsets,
        alphas=np.asarray(data["alphas"], dtype=float),
        p_max=float(data["p_max"]),
        betas=tuple(float(v) for v in data["betas"]),
        posture_cops=tuple(float(v) for v in cops) if cops else None,
        layout_hash=str(data.get("layout_hash", "")),
    )


@dataclass(frozen=True)
class PostureDwell:
    posture: str
    seconds: float


def sweep_schedule(dwell_seconds: float = 5.0) -> tuple[PostureDwell, ...]:
    """The ten-dwell sweep: spin CW -> spin CCW, then straight back."""
    forward = [PostureDwell(p, dwell_seconds) for p in POSTURES]
    return tuple(forward + forward[::-1])


@dataclass(frozen=True)
class CalibrationRecording:
    """Time-ordered sweep frames plus the schedule that produced them."""

    layout: SensorLayout
    frames: tuple[PressureFrame, ...]
    schedule: tuple[PostureDwell, ...] = field(default_factory=sweep_schedule)


def record_zero_offset(frames: Sequence[PressureFrame]) -> np.ndarray:
    """Per-sensor arithmetic mean of the resting recording."""
    if not frames:
        raise CalibrationError("no resting frames recorded")
    return np.mean([f.readings for f in frames], axis=0)


def compute_alphas(
    recording: CalibrationRecording,
    p_max: float,
    uncovered_fraction: float = UNCOVERED_FRACTION,
) -> np.ndarray:
    """Saturation weights from the sweep's top-decile column means.

    For each column, the largest tenth of its per-frame mean readings is
    averaged to estimate that user's achievable peak, and the weight is
    p_max / peak so a full press saturates every column equally. A column the
    sweep never meaningfully pressed is an error (the sweep must be redone),
    reported with its index.
    """
    if not recording.frames:
        raise CalibrationError("empty calibration recording")
    means = np.array([column_means(f) for f in recording.frames])
    k = max(1, means.shape[0] // 10)
    top = np.sort(means, axis=0)[-k:, :].mean(axis=0)
    for i, peak in enumerate(top):
        if peak <= uncovered_fraction * p_max:
            raise UncoveredColumnError(i)
    return p_max / top


def _tenth_segments(values: np.ndarray) -> np.ndarray:
    """Reshape to 10 equal segments, resampling by nearest index if needed."""
    n = len(values)
    keep = (n // 10) * 10
    if keep == 0:
        raise CalibrationError(f"sweep too short to segment: {n} samples")
    if keep != n:
        idx = np.round(np.linspace(0, n - 1, keep)).astype(int)
        values = values[idx]
    return values.reshape(10, -1)


def compute_betas(
    recording: CalibrationRecording,
    alphas: np.ndarray,
    use_alphas: bool = False,
    transient_fraction: float = DEFAULT_TRANSIENT_FRACTION,
) -> tuple[tuple[float, float, float, float], tuple[float, ...]]:
    """Classification points from the offset-corrected sweep.

    The per-sample cop series is split into ten equal segments (one per dwell;
    the recording is resampled to a multiple of ten first, and the leading
    `transient_fraction` of each segment is dropped as posture-transition
    smear). Segment i of the outbound sweep is averaged with segment 11-i of
    the return sweep to estimate posture cop i, and each classification point
    is the midpoint of adjacent posture cops.

    By default the cop series uses uniform column weights, which keeps the
    result invariant to an overall reading scale; `use_alphas=True` instead
    applies the freshly computed saturation weights.

    Returns (betas, posture_cops); raises if the recovered sequence is not
    strictly ordered inside (-1, 1).
    """
    s = normalized_positions(recording.layout)
    weights = np.asarray(alphas, dtype=float) if use_alphas else None
    cops = np.array(
        [pressure_centroid(column_means(f), s, weights) for f in recording.frames]
    )
    seg = _tenth_segments(cops)
    if transient_fraction > 0.0:
        drop = int(transient_fraction * seg.shape[1])
        if drop >= seg.shape[1]:
            raise CalibrationError("transient_fraction discards entire dwells")
        seg = seg[:, drop:]
    posture = tuple(
        (float(seg[i].mean()) + float(seg[9 - i].mean())) / 2.0 for i in range(5)
    )
    betas = tuple((posture[k] + posture[k + 1]) / 2.0 for k in range(4))
    if not (-1.0 < betas[0] < betas[1] < betas[2] < betas[3] < 1.0):
        raise CalibrationError(
            f"posture cops {np.round(posture, 4).tolist()} do not give strictly "
            f"ordered classification points: {np.round(betas, 4).tolist()}"
        )
    return betas, posture


def calibrate(
    rest_frames: Sequence[PressureFrame],
    sweep: CalibrationRecording,
    p_max: float,
    use_alphas_for_cop: bool = False,
    transient_fraction: float = DEFAULT_TRANSIENT_FRACTION,
) -> CalibrationProfile:
    """Full calibration: offsets from rest, then weights and points from the sweep.

    Raises on any failure; nothing is persisted here, so a failed run leaves no
    partial profile behind.
    """
    offsets = record_zero_offset(rest_frames)
    corrected = CalibrationRecording(
        layout=sweep.layout,
        frames=tuple(apply_zero_offset(f, offsets) for f in sweep.frames),
        schedule=sweep.schedule,
    )
    alphas = compute_alphas(corrected, p_max)
    betas, posture_cops = compute_betas(
        corrected,
        alphas,
        use_alphas=use_alphas_for_cop,
        transient_fraction=transient_fraction,
    )
    return CalibrationProfile(
        zero_offsets=offsets,
        alphas=alphas,
        p_max=p_max,
        betas=betas,
        posture_cops=posture_cops,
        layout_hash=layout_hash(sweep.layout),
    )
