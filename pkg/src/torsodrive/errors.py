"""Exception hierarchy shared across the control stack."""


class TorsoDriveError(Exception):
    """Base class for all torsodrive errors."""


class LayoutError(TorsoDriveError):
    """Sensor array geometry is invalid (degenerate span, asymmetric ends, ...)."""


class ShapeError(TorsoDriveError):
    """Array dimensions do not match between frame, layout and profile."""


class ProfileError(TorsoDriveError):
    """Calibration profile violates its invariants or does not match the layout."""


class CalibrationError(TorsoDriveError):
    """A calibration run could not produce a valid profile."""


class UncoveredColumnError(CalibrationError):
    """A sensor column was never pressed during the calibration sweep."""

    def __init__(self, column: int, message: str | None = None):
        self.column = column
        super().__init__(message or f"column {column} was never pressed during the sweep")


class MetricError(TorsoDriveError):
    """A metric is undefined for the given log (too short, missing markers, ...)."""


class SimulationFault(TorsoDriveError):
    """The simulator reached a non-finite state and halted."""
