"""torsodrive: hands-free torso-pressure HMI control stack with a simulated vehicle."""

from .calibration import (
    CalibrationProfile,
    CalibrationRecording,
    calibrate,
    default_profile,
    load_profile,
    save_profile,
)
from .driver import Circuit, DriverConfig, SyntheticDriver
from .intent import GainConfig, IntentInput, VelocityCommand, intent_tick
from .metrics import TrialMetrics, compare_report, evaluate
from .sensor import PressureFrame, SensorLayout, default_layout, load_layout, synth_frame
from .sim import RobotState, SimConfig, TrialLog, run_loop

__version__ = "0.1.0"

__all__ = [
    "CalibrationProfile",
    "CalibrationRecording",
    "Circuit",
    "DriverConfig",
    "GainConfig",
    "IntentInput",
    "PressureFrame",
    "RobotState",
    "SensorLayout",
    "SimConfig",
    "SyntheticDriver",
    "TrialLog",
    "TrialMetrics",
    "VelocityCommand",
    "calibrate",
    "compare_report",
    "default_layout",
    "default_profile",
    "evaluate",
    "intent_tick",
    "load_layout",
    "load_profile",
    "run_loop",
    "save_profile",
    "synth_frame",
]
