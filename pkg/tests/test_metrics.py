import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsodrive.errors import MetricError
from torsodrive.metrics import (
    Report,
    compare_report,
    completion_time,
    evaluate,
    fluency,
    jerk,
    normalized_input,
)
from torsodrive.sim import LogRecord, TrialLog

TICK = 1.0 / 150


def make_log(v_cmds, w_cmds=None, pressures=None, t0=0.0, dt=TICK):
    w_cmds = w_cmds if w_cmds is not None else [0.0] * len(v_cmds)
    pressures = pressures if pressures is not None else [0.5] * len(v_cmds)
    records = [
        LogRecord(
            t=t0 + i * dt, cop=0.0, pressure=p, mode="forward",
            v_cmd=v, w_cmd=w, v_act=0.0, w_act=0.0, x=0.0, y=0.0, theta=0.0,
        )
        for i, (v, w, p) in enumerate(zip(v_cmds, w_cmds, pressures))
    ]
    return TrialLog(records)


# --- completion time -------------------------------------------------------


def test_completion_time_span():
    log = make_log([1.0] * 11, dt=3.0)
    assert completion_time(log) == pytest.approx(30.0)


def test_completion_time_single_record_error():
    with pytest.raises(MetricError):
        completion_time(make_log([1.0]))


# --- jerk -------------------------------------------------------------------


def test_jerk_constant_command_zero():
    log = make_log([0.7] * 100, [-0.3] * 100)
    assert jerk(log) == 0.0


def test_jerk_single_step_matches_hand_value():
    n, k, dt = 60, 30, TICK
    dv, dw = 0.5, -0.25
    v = [0.2] * k + [0.2 + dv] * (n - k)
    w = [0.0] * k + [dw] * (n - k)
    log = make_log(v, w, dt=dt)
    # central differences: two nonzero samples of ||delta||/(2 dt) each
    span = (n - 1) * dt
    expected = math.hypot(dv, dw) / dt / (span * n)
    assert jerk(log) == pytest.approx(expected, rel=1e-12)


def test_jerk_sinusoid_matches_closed_form():
    # v = a sin(2 pi f t): mean |dv/dt| = a * 2 pi f * (2/pi) over whole periods
    a, f, dt = 0.8, 2.0, TICK
    n = int(round(3.0 / f / dt))  # exactly 3 periods
    t = np.arange(n) * dt
    log = make_log((a * np.sin(2 * math.pi * f * t)).tolist(), dt=dt)
    span = (n - 1) * dt
    expected = (a * 2 * math.pi * f * (2 / math.pi)) / span  # mean-norm / T
    assert jerk(log) == pytest.approx(expected, rel=0.01)


def test_jerk_time_shift_invariant():
    v = (0.5 + 0.3 * np.sin(np.linspace(0, 7, 200))).tolist()
    assert jerk(make_log(v, t0=0.0)) == pytest.approx(jerk(make_log(v, t0=55.5)), rel=1e-12)


def test_jerk_scales_linearly():
    rng = np.random.default_rng(8)
    v = rng.uniform(0, 1, 150)
    w = rng.uniform(-1, 1, 150)
    base = jerk(make_log(v.tolist(), w.tolist()))
    scaled = jerk(make_log((3 * v).tolist(), (3 * w).tolist()))
    assert scaled == pytest.approx(3 * base, rel=1e-12)


def test_jerk_needs_three_samples():
    with pytest.raises(MetricError):
        jerk(make_log([1.0, 2.0]))


def test_jerk_nonuniform_ticks():
    records = make_log([0.1, 0.5, 0.2, 0.9]).records
    bad = TrialLog(records[:3] + [LogRecord(**{**records[3].__dict__, "t": 99.0})])
    with pytest.raises(MetricError):
        jerk(bad)
    assert jerk(bad, on_nonuniform="resample") >= 0.0


# --- fluency ----------------------------------------------------------------


def test_fluency_constant_is_exactly_one():
    log = make_log([1.0] * 50, pressures=[0.42] * 50)
    assert fluency(log) == 1.0


def test_fluency_alternating_extremes_is_zero():
    log = make_log([0.0] * 40, pressures=[0.0, 1.0] * 20)
    assert fluency(log) == 0.0


def test_fluency_matches_bruteforce():
    rng = np.random.default_rng(12)
    lam = rng.uniform(0, 1, 300)
    log = make_log([0.0] * 300, pressures=lam.tolist())
    total = 0.0
    for i in range(1, 300):
        total += 1.0 - abs(lam[i] - lam[i - 1])
    assert fluency(log) == pytest.approx(total / 299, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=60))
def test_fluency_reversal_invariant(lam):
    fwd = fluency(make_log([0.0] * len(lam), pressures=lam))
    rev = fluency(make_log([0.0] * len(lam), pressures=lam[::-1]))
    assert fwd == pytest.approx(rev, rel=1e-12, abs=1e-12)


def test_fluency_command_source():
    log = make_log([2.0] * 30, [0.0] * 30)
    assert fluency(log, source="command") == 1.0


def test_fluency_needs_two_samples():
    with pytest.raises(MetricError):
        fluency(make_log([1.0]))


def test_normalized_input_range():
    log = make_log([5.0] * 10, [5.0] * 10, pressures=[7.0] * 10)
    assert np.all(normalized_input(log) <= 1.0)
    assert np.all(normalized_input(log, source="command") <= 1.0)


# --- evaluate / report -----------------------------------------------------


def test_evaluate_bundle():
    log = make_log([0.5] * 100)
    m = evaluate(log)
    assert m.samples == 100
    assert m.jerk == 0.0
    assert m.fluency == 1.0
    assert m.completion_time == pytest.approx(99 * TICK)


def test_report_identical_sets_identical_columns():
    logs = [make_log([0.5] * 60), make_log([0.2] * 80)]
    report = compare_report(logs, logs, labels=("x", "y"))
    x_rows = {r.metric: r for r in report.rows if r.condition == "x"}
    y_rows = {r.metric: r for r in report.rows if r.condition == "y"}
    for metric in x_rows:
        assert x_rows[metric].mean == y_rows[metric].mean
        assert x_rows[metric].sd == y_rows[metric].sd


def test_report_hand_computed_means():
    a = [make_log([0.5] * 31, dt=1.0), make_log([0.5] * 11, dt=1.0)]  # CT 30 and 10
    report = compare_report(a, a, labels=("a", "b"))
    ct = next(r for r in report.rows if r.condition == "a" and r.metric == "completion_time")
    assert ct.mean == pytest.approx(20.0)
    assert ct.sd == pytest.approx(np.std([30.0, 10.0], ddof=1))
    assert ct.n == 2


def test_report_empty_condition_errors():
    with pytest.raises(MetricError):
        compare_report([], [make_log([0.5] * 10)])


def test_report_sessions_split():
    logs = [make_log([0.5] * (10 * (i + 1)), dt=1.0) for i in range(4)]
    report = compare_report(logs, logs, labels=("t", "j"), sessions=2)
    sessions = {r.session for r in report.rows}
    assert sessions == {"1", "2"}
    csv_text = report.to_csv_text()
    assert csv_text.splitlines()[0] == "condition,session,metric,mean,sd,n"
    assert len(csv_text.splitlines()) == 1 + 2 * 2 * 3


def test_report_table_renders():
    logs = [make_log([0.5] * 60)]
    table = compare_report(logs, logs, labels=("torso", "joystick")).format_table()
    assert "torso" in table and "joystick" in table
    assert "CT" in table and "Fl x100" in table
