"""Pressure-sensing bar model: array geometry, frame cleanup, synthetic frames.

The bar carries an m-row by n-column matrix of force-sensitive resistors.
Columns are indexed along the bar's lateral axis; everything downstream works
on per-column mean readings and the columns' normalized positions in [-1, 1].
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import LayoutError, ShapeError

VARIANT_TAGS = ("center-line", "dense-x", "weighted-spots")

# Prototype bar: five 44 mm FSR columns on a 49 mm pitch, single row.
DEFAULT_COLUMN_POSITIONS_MM = (-98.0, -49.0, 0.0, 49.0, 98.0)

# Relative slack when checking that normalized positions stay inside [-1, 1].
_RANGE_TOL = 1e-9


@dataclass(frozen=True)
class SensorLayout:
    """Geometry of the sensing array along the bar's lateral axis."""

    columns: int
    rows: int = 1
    column_positions_mm: tuple[float, ...] = DEFAULT_COLUMN_POSITIONS_MM
    sensor_max: float = 1.0  # full-scale raw reading of a single sensor
    variant_tag: str = "center-line"

    def __post_init__(self):
        if self.columns < 2:
            raise LayoutError(f"need at least 2 sensor columns, got {self.columns}")
        if self.rows < 1:
            raise LayoutError(f"need at least 1 sensor row, got {self.rows}")
        if len(self.column_positions_mm) != self.columns:
            raise LayoutError(
                f"{self.columns} columns but {len(self.column_positions_mm)} positions"
            )
        x = self.column_positions_mm
        if any(b <= a for a, b in zip(x, x[1:])):
            raise LayoutError(f"column positions must be strictly increasing, got {x}")
        if self.sensor_max <= 0:
            raise LayoutError("sensor_max must be positive")
        if self.variant_tag not in VARIANT_TAGS:
            raise LayoutError(f"unknown variant_tag {self.variant_tag!r}")
        object.__setattr__(
            self, "column_positions_mm", tuple(float(v) for v in self.column_positions_mm)
        )
        # Rejects layouts whose normalized positions leave [-1, 1].
        normalized_positions(self)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.columns)

    def to_dict(self) -> dict:
        return {
            "columns": self.columns,
            "rows": self.rows,
            "column_positions_mm": list(self.column_positions_mm),
            "sensor_max": self.sensor_max,
            "variant_tag": self.variant_tag,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SensorLayout":
        return cls(
            columns=int(data["columns"]),
            rows=int(data["rows"]),
            column_positions_mm=tuple(float(v) for v in data["column_positions_mm"]),
            sensor_max=float(data.get("sensor_max", 1.0)),
            variant_tag=str(data.get("variant_tag", "center-line")),
        )


def default_layout() -> SensorLayout:
    """The five-column prototype bar (220 mm of sensing, one row)."""
    return SensorLayout(columns=5)


def layout_hash(layout: SensorLayout) -> str:
    """Stable short digest binding profiles to the geometry they were made for."""
    canon = json.dumps(layout.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def load_layout(path: str | Path) -> SensorLayout:
    with open(path, encoding="utf-8") as fh:
        return SensorLayout.from_dict(json.load(fh))


def save_layout(layout: SensorLayout, path: str | Path) -> None:
    Path(path).write_text(json.dumps(layout.to_dict(), indent=2, sort_keys=True) + "\n")


def normalized_positions(layout: SensorLayout) -> np.ndarray:
    """Column centers mapped onto the dimensionless bar axis.

    s_i = x_i / (|x_n - x_1| / 2). The mapping only lands every column inside
    [-1, 1] when the outermost columns sit symmetrically about x = 0, which is
    what keeps the center of pressure bounded downstream, so anything else is
    rejected.
    """
    x = np.asarray(layout.column_positions_mm, dtype=float)
    half_span = abs(x[-1] - x[0]) / 2.0
    if half_span <= 0.0:
        raise LayoutError("degenerate layout: first and last column coincide")
    s = x / half_span
    if np.any(np.abs(s) > 1.0 + _RANGE_TOL):
        raise LayoutError(
            f"normalized positions {np.round(s, 6).tolist()} leave [-1, 1]; "
            "outer columns must be symmetric about the bar center"
        )
    return np.clip(s, -1.0, 1.0)


@dataclass(frozen=True)
class PressureFrame:
    """One timestamped sample of the whole sensor matrix (rows x columns, raw units)."""

    timestamp: float
    readings: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.readings, dtype=float)
        if r.ndim != 2:
            raise ShapeError(f"readings must be a 2-D matrix, got shape {r.shape}")
        if not np.all(np.isfinite(r)):
            raise ValueError("readings must be finite")
        if np.any(r < 0.0):
            raise ValueError("raw readings must be non-negative")
        object.__setattr__(self, "readings", r)

    @property
    def shape(self) -> tuple[int, int]:
        return self.readings.shape


def check_frame_layout(frame: PressureFrame, layout: SensorLayout) -> None:
    if frame.readings.shape != layout.shape:
        raise ShapeError(
            f"frame shape {frame.readings.shape} does not match layout {layout.shape}"
        )


def zero_frame(layout: SensorLayout, timestamp: float = 0.0) -> PressureFrame:
    return PressureFrame(timestamp, np.zeros(layout.shape))


def column_means(frame: PressureFrame) -> np.ndarray:
    """Per-column mean reading, length n."""
    return frame.readings.mean(axis=0)


def apply_zero_offset(frame: PressureFrame, offsets) -> PressureFrame:
    """Subtract per-sensor resting offsets, clamping at zero.

    `offsets` may be flat (length rows*columns, row-major) or already shaped
    like the frame. The timestamp is preserved.
    """
    off = np.asarray(offsets, dtype=float)
    if off.size != frame.readings.size:
        raise ShapeError(
            f"got {off.size} offsets for {frame.readings.size} sensors"
        )
    off = off.reshape(frame.readings.shape)
    return PressureFrame(frame.timestamp, np.maximum(frame.readings - off, 0.0))


def synth_frame(
    layout: SensorLayout,
    center: float,
    amplitude: float,
    width: float,
    rng: int | np.random.Generator | None = None,
    noise: float | None = None,
    timestamp: float = 0.0,
) -> PressureFrame:
    """Synthesize a Gaussian press centred at `center` on the normalized axis.

    Column means follow amplitude * exp(-(s_i - center)^2 / (2 width^2)); every
    row carries its column's value, so the column mean equals the bump. With
    `rng` given (seed or Generator), additive uniform noise in [-noise, +noise]
    is applied per sensor (default half-range 0.01 * sensor_max) and the result
    is clamped to [0, sensor_max]. Noiseless calls are pure; seeded calls are
    deterministic for a fixed seed.
    """
    if width <= 0.0:
        raise ValueError("width must be positive")
    if not 0.0 <= amplitude <= layout.sensor_max:
        raise ValueError(f"amplitude {amplitude} outside [0, {layout.sensor_max}]")
    s = normalized_positions(layout)
    col = amplitude * np.exp(-((s - center) ** 2) / (2.0 * width * width))
    readings = np.tile(col, (layout.rows, 1))
    if rng is not None:
        gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        eta = 0.01 * layout.sensor_max if noise is None else noise
        readings = readings + gen.uniform(-eta, eta, size=readings.shape)
    return PressureFrame(timestamp, np.clip(readings, 0.0, layout.sensor_max))
