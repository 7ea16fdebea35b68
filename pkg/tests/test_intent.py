import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torsodrive.calibration import default_profile
from torsodrive.errors import ProfileError, ShapeError
from torsodrive.intent import (
    GainConfig,
    IntentInput,
    backward_command,
    compute_cop,
    detect_backward,
    intent_tick,
    map_velocity,
)
from torsodrive.sensor import (
    PressureFrame,
    default_layout,
    normalized_positions,
    synth_frame,
    zero_frame,
)

LAYOUT = default_layout()
PROFILE = default_profile(LAYOUT)
GAINS = GainConfig()


def frame_from_means(means, rows=1):
    return PressureFrame(0.0, np.tile(np.asarray(means, float), (rows, 1)))


def bruteforce_cop(readings, positions, alphas, p_max):
    """Independent re-evaluation: weighted numerator over unweighted total."""
    rows = len(readings)
    cols = len(readings[0])
    means = []
    for i in range(cols):
        total = 0.0
        for j in range(rows):
            total += readings[j][i]
        means.append(total / rows)
    denom = sum(means)
    num = 0.0
    best = 0.0
    for i in range(cols):
        num += alphas[i] * means[i] * positions[i]
        best = max(best, alphas[i] * means[i])
    cop = min(1.0, max(-1.0, num / denom))
    return cop, min(p_max, best)


# --- compute_cop -----------------------------------------------------------


def test_cop_center_column_only():
    frame = frame_from_means([0.0, 0.0, 0.9, 0.0, 0.0])
    out = compute_cop(frame, LAYOUT, PROFILE)
    assert out.cop == 0.0
    assert out.pressure == pytest.approx(0.9)


def test_cop_leftmost_column_only():
    frame = frame_from_means([0.7, 0.0, 0.0, 0.0, 0.0])
    out = compute_cop(frame, LAYOUT, PROFILE)
    assert out.cop == -1.0


def test_cop_matches_bruteforce_oracle():
    rng = np.random.default_rng(2024)
    layout = type(LAYOUT)(columns=5, rows=3)
    profile = default_profile(layout)
    s = normalized_positions(layout)
    for _ in range(500):
        readings = rng.uniform(0.0, 1.0, size=(3, 5))
        frame = PressureFrame(0.0, readings)
        out = compute_cop(frame, layout, profile)
        exp_cop, exp_p = bruteforce_cop(readings.tolist(), s.tolist(), [1.0] * 5, 1.0)
        assert out.cop == pytest.approx(exp_cop, rel=1e-12, abs=1e-15)
        assert out.pressure == pytest.approx(exp_p, rel=1e-12, abs=1e-15)


def test_cop_idle_sentinel_under_deadband():
    frame = frame_from_means([0.001, 0.0, 0.0, 0.0, 0.001])
    out = compute_cop(frame, LAYOUT, PROFILE)
    assert (out.cop, out.pressure) == (0.0, 0.0)


def test_cop_shape_errors():
    with pytest.raises(ShapeError):
        compute_cop(frame_from_means([1.0, 0.0, 0.0]), LAYOUT, PROFILE)


def test_cop_alphas_affect_magnitude():
    profile = default_profile(LAYOUT)
    boosted = type(profile)(
        zero_offsets=profile.zero_offsets,
        alphas=np.array([2.0, 1.0, 1.0, 1.0, 1.0]),
        p_max=2.0,
        betas=profile.betas,
    )
    frame = frame_from_means([0.6, 0.0, 0.5, 0.0, 0.0])
    out = compute_cop(frame, LAYOUT, boosted)
    assert out.pressure == pytest.approx(1.2)  # max(alpha * mean)


# --- map_velocity ----------------------------------------------------------


def test_map_spin_cw_region():
    cmd = map_velocity(IntentInput(-1.0, 1.0), PROFILE, GAINS)
    assert (cmd.v, cmd.omega) == (0.0, -GAINS.omega_max)
    assert cmd.mode == "forward"


def test_map_plateau():
    b2, b3 = PROFILE.betas[1], PROFILE.betas[2]
    cmd = map_velocity(IntentInput((b2 + b3) / 2, 1.0), PROFILE, GAINS)
    assert (cmd.v, cmd.omega) == (GAINS.v_max, 0.0)


def test_map_zero_pressure_is_idle():
    cmd = map_velocity(IntentInput(0.33, 0.0), PROFILE, GAINS)
    assert (cmd.v, cmd.omega, cmd.mode) == (0.0, 0.0, "idle")


def test_map_ramp_midpoint_half_amplitude():
    # At the midpoint of [b1, b2) both half-sines pass through sin(0) = 0.
    b1, b2 = PROFILE.betas[0], PROFILE.betas[1]
    cmd = map_velocity(IntentInput((b1 + b2) / 2, 1.0), PROFILE, GAINS)
    assert cmd.v == pytest.approx(GAINS.v_max / 2, rel=1e-12)
    assert cmd.omega == pytest.approx(-GAINS.omega_max / 2, rel=1e-12)


def test_map_endpoints_exact():
    left = map_velocity(IntentInput(-1.0, 0.7), PROFILE, GAINS)
    right = map_velocity(IntentInput(1.0, 0.7), PROFILE, GAINS)
    wm = GAINS.k2 * 0.7
    assert (left.v, left.omega) == (0.0, -wm)
    assert (right.v, right.omega) == (0.0, wm)


def test_map_region_boundaries_continuous():
    eps = 1e-12
    for b in PROFILE.betas:
        lo = map_velocity(IntentInput(b - eps, 1.0), PROFILE, GAINS)
        hi = map_velocity(IntentInput(b, 1.0), PROFILE, GAINS)
        assert lo.v == pytest.approx(hi.v, abs=1e-9)
        assert lo.omega == pytest.approx(hi.omega, abs=1e-9)


def test_map_unordered_betas_rejected():
    profile = default_profile(LAYOUT)
    object.__setattr__(profile, "betas", (0.5, -0.5, 0.2, 0.6))  # bypass validation
    with pytest.raises(ProfileError):
        map_velocity(IntentInput(0.0, 1.0), profile, GAINS)


@settings(max_examples=200, deadline=None)
@given(
    cop=st.floats(-1.0, 1.0),
    pressure=st.floats(0.0, 1.0),
)
def test_map_range_invariant(cop, pressure):
    cmd = map_velocity(IntentInput(cop, pressure), PROFILE, GAINS)
    assert 0.0 <= cmd.v <= GAINS.v_max + 1e-12
    assert abs(cmd.omega) <= GAINS.omega_max + 1e-12


@settings(max_examples=200, deadline=None)
@given(cop=st.floats(-1.0, 1.0), pressure=st.floats(1e-6, 1.0))
def test_map_mirror_antisymmetry(cop, pressure):
    # default betas are symmetric: w(-d) = -w(d), v(-d) = v(d)
    plus = map_velocity(IntentInput(cop, pressure), PROFILE, GAINS)
    minus = map_velocity(IntentInput(-cop, pressure), PROFILE, GAINS)
    assert minus.omega == pytest.approx(-plus.omega, rel=1e-9, abs=1e-12)
    assert minus.v == pytest.approx(plus.v, rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    cop=st.floats(-1.0, 1.0),
    pressure=st.floats(1e-3, 0.45),
    scale=st.floats(0.1, 2.0),
)
def test_map_magnitude_scaling_below_saturation(cop, pressure, scale):
    if scale * pressure > 1.0:
        scale = 1.0 / pressure
    base = map_velocity(IntentInput(cop, pressure), PROFILE, GAINS)
    scaled = map_velocity(IntentInput(cop, scale * pressure), PROFILE, GAINS)
    assert scaled.v == pytest.approx(scale * base.v, rel=1e-9, abs=1e-12)
    assert scaled.omega == pytest.approx(scale * base.omega, rel=1e-9, abs=1e-12)


def test_map_saturation_invariance():
    profile = default_profile(LAYOUT)
    # p_max caps pressure, so any request above it maps identically
    a = map_velocity(IntentInput(0.1, 1.0), profile, GAINS)
    b = map_velocity(IntentInput(0.1, 5.0), profile, GAINS)
    assert (a.v, a.omega) == (b.v, b.omega)


def test_map_omega_monotone_on_grid():
    grid = np.linspace(-1.0, 1.0, 4001)
    omegas = [map_velocity(IntentInput(d, 0.8), PROFILE, GAINS).omega for d in grid]
    assert np.all(np.diff(omegas) >= -1e-12)


# --- backward gesture ------------------------------------------------------


def test_backward_both_thumbs():
    frame = frame_from_means([1.0, 0.0, 0.0, 0.0, 1.0])
    assert detect_backward(frame, LAYOUT, PROFILE) == "both"
    cmd = intent_tick(frame, LAYOUT, PROFILE, GAINS)
    assert cmd.mode == "backward"
    assert cmd.v < 0
    assert cmd.omega == 0.0


def test_backward_single_thumb_turns_away():
    left = frame_from_means([0.9, 0.0, 0.0, 0.0, 0.0])
    right = frame_from_means([0.0, 0.0, 0.0, 0.0, 0.9])
    assert detect_backward(left, LAYOUT, PROFILE) == "left"
    assert detect_backward(right, LAYOUT, PROFILE) == "right"
    cmd_left = intent_tick(left, LAYOUT, PROFILE, GAINS)
    cmd_right = intent_tick(right, LAYOUT, PROFILE, GAINS)
    assert cmd_left.mode == cmd_right.mode == "backward"
    assert cmd_left.v < 0 and cmd_right.v < 0
    assert cmd_left.omega > 0 > cmd_right.omega


def test_backward_uniform_pressure_is_forward():
    frame = frame_from_means([0.8, 0.8, 0.8, 0.8, 0.8])
    assert detect_backward(frame, LAYOUT, PROFILE) == "none"


def test_backward_all_zero():
    assert detect_backward(zero_frame(LAYOUT), LAYOUT, PROFILE) == "none"


def test_backward_requires_interior():
    layout2 = type(LAYOUT)(columns=2, column_positions_mm=(-50.0, 50.0))
    profile2 = default_profile(layout2)
    frame = PressureFrame(0.0, [[1.0, 1.0]])
    assert detect_backward(frame, layout2, profile2) == "none"


def test_backward_speed_proportional():
    soft = intent_tick(frame_from_means([0.6, 0, 0, 0, 0.6]), LAYOUT, PROFILE, GAINS)
    hard = intent_tick(frame_from_means([0.9, 0, 0, 0, 0.9]), LAYOUT, PROFILE, GAINS)
    assert hard.v < soft.v < 0
    assert soft.v == pytest.approx(-GAINS.k1 * 0.6)


# --- intent_tick pipeline --------------------------------------------------


def test_tick_idle_frame():
    cmd = intent_tick(zero_frame(LAYOUT), LAYOUT, PROFILE, GAINS)
    assert (cmd.v, cmd.omega, cmd.mode) == (0.0, 0.0, "idle")


def test_tick_center_press_full_forward():
    frame = synth_frame(LAYOUT, center=0.0, amplitude=1.0, width=0.05)
    cmd = intent_tick(frame, LAYOUT, PROFILE, GAINS)
    assert cmd.mode == "forward"
    assert cmd.v == pytest.approx(GAINS.v_max)
    assert cmd.omega == pytest.approx(0.0, abs=1e-12)


def test_tick_applies_zero_offsets():
    profile = default_profile(LAYOUT)
    object.__setattr__(profile, "zero_offsets", np.full(LAYOUT.shape, 0.1))
    raw = frame_from_means([0.1, 0.1, 0.6, 0.1, 0.1])
    cmd = intent_tick(raw, LAYOUT, profile, GAINS)
    assert cmd.cop == pytest.approx(0.0, abs=1e-12)
    assert cmd.pressure == pytest.approx(0.5)


# --- gains validation ------------------------------------------------------


def test_gain_invariant_against_profile():
    GainConfig().validate_against(PROFILE)
    with pytest.raises(ProfileError):
        GainConfig(k1=3.0).validate_against(PROFILE)  # 3.0 > v_max/p_max = 2.0
    with pytest.raises(ProfileError):
        GainConfig(k2=4.0).validate_against(PROFILE)


def test_gain_config_rejects_nonsense():
    with pytest.raises(ProfileError):
        GainConfig(k1=-1.0)
    with pytest.raises(ProfileError):
        GainConfig(theta_i=0.9, theta_b=0.5)


def test_continuity_bound_on_fine_grid():
    # |step-to-step change| <= (pi/2) * max(vm, wm) * step / min ramp width + 1e-9
    step = 1e-3
    grid = np.arange(-1.0, 1.0 + step / 2, step)
    b1, b2, b3, b4 = PROFILE.betas
    vm, wm = GAINS.v_max, GAINS.omega_max
    bound = (math.pi / 2) * max(vm, wm) * step / min(b2 - b1, b4 - b3) + 1e-9
    prev = None
    for d in grid:
        cmd = map_velocity(IntentInput(float(d), 1.0), PROFILE, GAINS)
        if prev is not None:
            assert abs(cmd.v - prev.v) <= bound
            assert abs(cmd.omega - prev.omega) <= bound
        prev = cmd
