"""Trial evaluation metrics: completion time, command jerk, input fluency.

Jerk and fluency characterize the smoothness and steadiness of user control,
so both are computed from commanded (not actual) quantities. The normalized
user input for fluency defaults to pressure over P_max and can be switched to
the normalized command-vector magnitude for sensitivity checks.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .errors import MetricError
from .intent import GainConfig
from .sim import TrialLog

LambdaSource = Literal["pressure", "command"]

METRIC_NAMES = ("completion_time", "jerk", "fluency")

# Relative tolerance for the uniform-tick check in jerk(). Loose enough to
# absorb the trial CSV's 9-significant-digit timestamp quantization, tight
# enough to catch genuinely irregular sampling.
_TICK_TOL = 1e-3


@dataclass(frozen=True)
class TrialMetrics:
    completion_time: float  # s
    jerk: float  # norm of command derivative, time- and sample-normalized
    fluency: float  # in [0, 1]; 1 = perfectly steady input
    samples: int
    t_start: float
    t_end: float


def completion_time(log: TrialLog) -> float:
    """Task completion time: last minus first in-task timestamp."""
    if len(log) < 2:
        raise MetricError(f"completion time undefined for {len(log)} record(s)")
    t = log.column("t")
    span = float(t[-1] - t[0])
    if span <= 0:
        raise MetricError("log timestamps do not advance")
    return span


def _uniform_tick(t: np.ndarray, on_nonuniform: str) -> float:
    dts = np.diff(t)
    dt = float(np.median(dts))
    if dt <= 0:
        raise MetricError("log timestamps do not advance")
    if np.max(np.abs(dts - dt)) > _TICK_TOL * dt:
        if on_nonuniform == "resample":
            return float(t[-1] - t[0]) / (len(t) - 1)
        raise MetricError("non-uniform log timestamps (pass on_nonuniform='resample')")
    return dt


def jerk(log: TrialLog, on_nonuniform: str = "error") -> float:
    """Mean command-derivative norm, normalized by completion time.

    J = sum_i ||d(v_cmd, w_cmd)/dt at tick i|| / (T * N), with central finite
    differences over the intent tick (one-sided at the ends).
    """
    if len(log) < 3:
        raise MetricError(f"jerk needs at least 3 samples, got {len(log)}")
    t = log.column("t")
    dt = _uniform_tick(t, on_nonuniform)
    span = float(t[-1] - t[0])
    if span <= 0:
        raise MetricError("log timestamps do not advance")
    dv = np.gradient(log.column("v_cmd"), dt)
    dw = np.gradient(log.column("w_cmd"), dt)
    norms = np.hypot(dv, dw)
    return float(norms.sum() / (span * len(log)))


def normalized_input(
    log: TrialLog,
    source: LambdaSource = "pressure",
    p_max: float = 1.0,
    gains: GainConfig | None = None,
) -> np.ndarray:
    """Per-tick user input magnitude in [0, 1] (the fluency signal)."""
    if source == "pressure":
        return np.clip(log.column("pressure") / p_max, 0.0, 1.0)
    if source == "command":
        g = gains if gains is not None else GainConfig()
        full = math.hypot(g.v_max, g.omega_max)
        return np.clip(
            np.hypot(log.column("v_cmd"), log.column("w_cmd")) / full, 0.0, 1.0
        )
    raise MetricError(f"unknown input source {source!r}")


def fluency(
    log: TrialLog,
    source: LambdaSource = "pressure",
    p_max: float = 1.0,
    gains: GainConfig | None = None,
) -> float:
    """Mean sample-to-sample steadiness of the normalized input.

    F = (1/(N-1)) * sum_{i>=2} (1 - |L_i - L_{i-1}|); the (N-1) normalization
    makes a perfectly constant input score exactly 1.
    """
    if len(log) < 2:
        raise MetricError(f"fluency needs at least 2 samples, got {len(log)}")
    lam = normalized_input(log, source=source, p_max=p_max, gains=gains)
    return float(np.mean(1.0 - np.abs(np.diff(lam))))


def evaluate(
    log: TrialLog,
    source: LambdaSource = "pressure",
    p_max: float = 1.0,
    gains: GainConfig | None = None,
) -> TrialMetrics:
    t = log.column("t") if len(log) else np.array([])
    return TrialMetrics(
        completion_time=completion_time(log),
        jerk=jerk(log),
        fluency=fluency(log, source=source, p_max=p_max, gains=gains),
        samples=len(log),
        t_start=float(t[0]),
        t_end=float(t[-1]),
    )


@dataclass(frozen=True)
class ReportRow:
    condition: str
    session: str
    metric: str
    mean: float
    sd: float
    n: int


class Report:
    """Per-condition aggregate of trial metrics (mean +/- sd over trials)."""

    def __init__(self, rows: Sequence[ReportRow]):
        self.rows = list(rows)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write("condition,session,metric,mean,sd,n\n")
        for r in self.rows:
            buf.write(
                f"{r.condition},{r.session},{r.metric},"
                f"{format(r.mean, '.9g')},{format(r.sd, '.9g')},{r.n}\n"
            )
        return buf.getvalue()

    def to_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text())

    def format_table(self) -> str:
        """Human-readable CT / Jk / Fl table (fluency also scaled x100)."""
        lines = [
            f"{'condition':<12} {'session':<8} {'CT [s]':>16} {'Jk':>16} "
            f"{'Fl':>16} {'Fl x100':>16}"
        ]
        keyed = {(r.condition, r.session, r.metric): r for r in self.rows}
        seen = []
        for r in self.rows:
            if (r.condition, r.session) not in seen:
                seen.append((r.condition, r.session))
        for cond, sess in seen:
            ct = keyed[(cond, sess, "completion_time")]
            jk = keyed[(cond, sess, "jerk")]
            fl = keyed[(cond, sess, "fluency")]
            lines.append(
                f"{cond:<12} {sess:<8} "
                f"{ct.mean:8.2f} ± {ct.sd:5.2f} "
                f"{jk.mean:8.3f} ± {jk.sd:6.3f} "
                f"{fl.mean:8.4f} ± {fl.sd:6.4f} "
                f"{100 * fl.mean:8.2f} ± {100 * fl.sd:6.2f}"
            )
        return "\n".join(lines)


def _aggregate(
    condition: str,
    session: str,
    logs: Sequence[TrialLog],
    source: LambdaSource,
    p_max: float,
    gains: GainConfig | None,
) -> list[ReportRow]:
    values = {name: [] for name in METRIC_NAMES}
    for log in logs:
        m = evaluate(log, source=source, p_max=p_max, gains=gains)
        values["completion_time"].append(m.completion_time)
        values["jerk"].append(m.jerk)
        values["fluency"].append(m.fluency)
    rows = []
    for name in METRIC_NAMES:
        arr = np.asarray(values[name])
        sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        rows.append(ReportRow(condition, session, name, float(arr.mean()), sd, len(arr)))
    return rows


def report_conditions(
    groups: dict[str, Sequence[TrialLog]],
    sessions: int = 1,
    source: LambdaSource = "pressure",
    p_max: float = 1.0,
    gains: GainConfig | None = None,
) -> Report:
    """Aggregate rows per condition, one row set per session group.

    Each log is one trial; `sessions` splits a condition's trials into that
    many consecutive session groups, each reported with its own mean and sd.
    """
    rows: list[ReportRow] = []
    for label, logs in groups.items():
        logs = list(logs)
        if not logs:
            raise MetricError(f"no logs for condition {label!r}")
        if sessions < 1 or sessions > len(logs):
            raise MetricError(f"cannot split {len(logs)} logs into {sessions} sessions")
        bounds = np.linspace(0, len(logs), sessions + 1).astype(int)
        for si in range(sessions):
            group = logs[bounds[si]:bounds[si + 1]]
            rows.extend(
                _aggregate(label, str(si + 1), group, source, p_max, gains)
            )
    return Report(rows)


def compare_report(
    logs_a: Sequence[TrialLog],
    logs_b: Sequence[TrialLog],
    labels: tuple[str, str] = ("a", "b"),
    sessions: int = 1,
    source: LambdaSource = "pressure",
    p_max: float = 1.0,
    gains: GainConfig | None = None,
) -> Report:
    """Two-condition comparison (e.g. torso HMI against a joystick baseline)."""
    if labels[0] == labels[1]:
        raise MetricError("comparison conditions need distinct labels")
    return report_conditions(
        {labels[0]: logs_a, labels[1]: logs_b},
        sessions=sessions,
        source=source,
        p_max=p_max,
        gains=gains,
    )
