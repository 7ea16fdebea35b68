import math

import numpy as np
import pytest

from torsodrive.calibration import default_profile
from torsodrive.driver import (
    Circuit,
    DriverConfig,
    SyntheticDriver,
    backward_scenario,
    drive_frame,
    figure_eight_waypoints,
    inverse_intent,
    start_pose,
    steer_to_waypoint,
    thumb_frame,
)
from torsodrive.errors import TorsoDriveError
from torsodrive.intent import GainConfig, IntentInput, compute_cop, map_velocity
from torsodrive.sensor import default_layout
from torsodrive.sim import RobotState, SimConfig, run_loop

LAYOUT = default_layout()
PROFILE = default_profile(LAYOUT)
GAINS = GainConfig()
CFG = DriverConfig()


# --- steering --------------------------------------------------------------


def test_steer_aimed_at_waypoint():
    state = RobotState(x=0.0, y=0.0, theta=0.0)
    v, w = steer_to_waypoint(state, (3.0, 0.0), GAINS, CFG)
    assert w == 0.0
    assert v == GAINS.v_max


def test_steer_waypoint_behind():
    state = RobotState(x=0.0, y=0.0, theta=0.0)
    v, w = steer_to_waypoint(state, (-3.0, 0.0), GAINS, CFG)
    assert abs(w) == GAINS.omega_max
    assert v == pytest.approx(0.0, abs=1e-12)


def test_steer_mirrored_poses():
    left = steer_to_waypoint(RobotState(theta=0.3), (2.0, 1.0), GAINS, CFG)
    right = steer_to_waypoint(RobotState(theta=-0.3), (2.0, -1.0), GAINS, CFG)
    assert left[0] == pytest.approx(right[0], rel=1e-12)
    assert left[1] == pytest.approx(-right[1], rel=1e-12)


# --- inverse intent --------------------------------------------------------


def test_inverse_plateau_canonical():
    cop, p = inverse_intent(GAINS.v_max, 0.0, PROFILE, GAINS)
    b2, b3 = PROFILE.betas[1], PROFILE.betas[2]
    assert cop == (b2 + b3) / 2
    assert p == PROFILE.p_max
    cmd = map_velocity(IntentInput(cop, p), PROFILE, GAINS)
    assert (cmd.v, cmd.omega) == (GAINS.v_max, 0.0)


def test_inverse_full_spin_regions():
    cop_cw, p = inverse_intent(0.0, -GAINS.omega_max, PROFILE, GAINS)
    assert cop_cw < PROFILE.betas[0]
    assert p == PROFILE.p_max
    cop_ccw, _ = inverse_intent(0.0, GAINS.omega_max, PROFILE, GAINS)
    assert cop_ccw > PROFILE.betas[3]
    cmd = map_velocity(IntentInput(cop_cw, p), PROFILE, GAINS)
    assert (cmd.v, cmd.omega) == (0.0, -GAINS.omega_max)


def test_inverse_idle():
    assert inverse_intent(0.0, 0.0, PROFILE, GAINS) == (0.0, 0.0)


def test_inverse_round_trip_on_curve():
    # commands produced by the forward map are reproduced exactly
    tol = 0.05 * max(GAINS.v_max, GAINS.omega_max)
    for cop in np.linspace(-0.99, 0.99, 81):
        for pressure in (0.2, 0.6, 1.0):
            cmd = map_velocity(IntentInput(float(cop), pressure), PROFILE, GAINS)
            cop2, p2 = inverse_intent(cmd.v, cmd.omega, PROFILE, GAINS)
            again = map_velocity(IntentInput(cop2, p2), PROFILE, GAINS)
            assert abs(again.v - cmd.v) <= tol
            assert abs(again.omega - cmd.omega) <= tol
            # ramp/plateau inversion is exact, not merely within tolerance
            assert abs(again.v - cmd.v) <= 1e-9
            assert abs(again.omega - cmd.omega) <= 1e-9


def test_inverse_infeasible_request_clamps():
    cop, p = inverse_intent(10.0, 10.0, PROFILE, GAINS)
    assert p == PROFILE.p_max
    cmd = map_velocity(IntentInput(cop, p), PROFILE, GAINS)
    assert cmd.v <= GAINS.v_max
    assert abs(cmd.omega) <= GAINS.omega_max


# --- drive_frame -----------------------------------------------------------


def test_drive_frame_cop_grid_fidelity():
    for target in np.linspace(-1.0, 1.0, 41):
        frame = drive_frame(float(target), 0.8, LAYOUT, PROFILE, CFG)
        out = compute_cop(frame, LAYOUT, PROFILE)
        assert abs(out.cop - target) <= 0.03
        assert out.pressure == pytest.approx(0.8, rel=1e-9)


def test_drive_frame_idle():
    frame = drive_frame(0.3, 0.0, LAYOUT, PROFILE, CFG)
    assert np.all(frame.readings == 0.0)


def test_drive_frame_deterministic():
    a = drive_frame(0.4, 0.9, LAYOUT, PROFILE, CFG, np.random.default_rng(6))
    b = drive_frame(0.4, 0.9, LAYOUT, PROFILE, CFG, np.random.default_rng(6))
    np.testing.assert_array_equal(a.readings, b.readings)


def test_drive_frame_respects_calibrated_weights():
    alphas = np.array([1.4, 1.1, 1.0, 1.1, 1.4])
    profile = type(PROFILE)(
        zero_offsets=np.zeros(LAYOUT.shape),
        alphas=alphas,
        p_max=1.0,
        betas=PROFILE.betas,
    )
    for target in (-0.7, -0.2, 0.5):
        frame = drive_frame(target, 0.9, LAYOUT, profile, CFG)
        out = compute_cop(frame, LAYOUT, profile)
        assert abs(out.cop - target) <= 0.03
        assert out.pressure == pytest.approx(0.9, rel=1e-9)


# --- circuit and waypoints -------------------------------------------------


def test_circuit_validation():
    with pytest.raises(TorsoDriveError):
        Circuit(markers=((0.0, 0.0),))
    with pytest.raises(TorsoDriveError):
        Circuit(waypoint_radius=0.0)


def test_circuit_json_round_trip(tmp_path):
    from torsodrive.driver import load_circuit, save_circuit

    c = Circuit(markers=((0.0, 0.0), (4.0, 1.0)), laps=2, waypoint_radius=0.4)
    path = tmp_path / "circuit.json"
    save_circuit(c, path)
    assert load_circuit(path) == c


def test_figure_eight_waypoints_shape():
    circuit = Circuit()
    points, lap_ends = figure_eight_waypoints(circuit, CFG)
    assert len(points) == 6 * circuit.laps + 1  # plus return to start
    assert len(lap_ends) == circuit.laps
    # loops enclose both markers: points near each marker exist
    d0 = min(math.dist(p, circuit.markers[0]) for p in points)
    d1 = min(math.dist(p, circuit.markers[1]) for p in points)
    assert d0 <= CFG.orbit_radius + 1e-9
    assert d1 <= CFG.orbit_radius + 1e-9


def test_zero_laps_is_empty():
    points, lap_ends = figure_eight_waypoints(Circuit(laps=0), CFG)
    assert points == [] and lap_ends == []
    driver = SyntheticDriver(LAYOUT, PROFILE, GAINS, Circuit(laps=0))
    assert driver.done


# --- closed loop -----------------------------------------------------------


def run_figure_eight(seed=1234, laps=3, sense=1):
    circuit = Circuit(laps=laps)
    cfg = DriverConfig(orbit_sense=sense)
    driver = SyntheticDriver(LAYOUT, PROFILE, GAINS, circuit, cfg, seed=seed)
    log = run_loop(
        driver, LAYOUT, PROFILE, GAINS, SimConfig(), duration=120.0,
        initial_state=start_pose(circuit, cfg),
    )
    return driver, log


def test_figure_eight_completes_all_laps():
    driver, log = run_figure_eight(laps=3)
    assert driver.done
    assert len(driver.lap_times) == 3
    assert log.records[-1].t < 40.0  # well under the run budget


def test_figure_eight_deterministic():
    _, log_a = run_figure_eight()
    _, log_b = run_figure_eight()
    assert log_a.to_csv_text() == log_b.to_csv_text()


def test_figure_eight_never_reverses():
    _, log = run_figure_eight()
    assert all(r.mode != "backward" for r in log)


def test_mirrored_circuit_mirrors_trajectory():
    # flip handedness and mirror across the marker axis: same x, negated y
    _, log_a = run_figure_eight(seed=None, sense=1)
    _, log_b = run_figure_eight(seed=None, sense=-1)
    assert len(log_a) == len(log_b)
    np.testing.assert_allclose(log_a.column("x"), log_b.column("x"), atol=1e-9)
    np.testing.assert_allclose(log_a.column("y"), -log_b.column("y"), atol=1e-9)
    np.testing.assert_allclose(log_a.column("w_cmd"), -log_b.column("w_cmd"), atol=1e-9)


# --- backward scenario -----------------------------------------------------


def test_thumb_frame_shape():
    frame = thumb_frame(LAYOUT, 0.9)
    assert frame.readings[0, 0] == 0.9
    assert frame.readings[0, -1] == 0.9
    assert np.all(frame.readings[0, 1:-1] == 0.0)


def test_backward_scenario_reverses_one_meter():
    source = backward_scenario(LAYOUT, amplitude=0.9, duration=1.5)
    log = run_loop(source, LAYOUT, PROFILE, GAINS, SimConfig(), 5.0)
    assert all(r.mode == "backward" for r in log)
    assert all(r.v_cmd < 0 for r in log)
    assert log.records[-1].x < -0.8  # backed out of the dead end
