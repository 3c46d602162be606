import math

import numpy as np
import pytest

from jumpctl.gait import (
    TWO_PI,
    GaitConfig,
    NotInSwing,
    PhaseState,
    advance_phase,
    desired_contact_state,
    estimate_stance_duration,
    preset_gait,
    stance_intervals,
    swing_progress,
)
from jumpctl.model import ConfigError

PI = math.pi


def test_advance_phase_arithmetic():
    state = advance_phase(PhaseState.from_phase(1.0), 2.0, 0.002)
    assert state.phase == pytest.approx(1.0 + 2 * PI * 2.0 * 0.002, abs=1e-12)
    assert state.phase == pytest.approx(1.0251327, abs=1e-7)
    assert state.cycle_count == 0


def test_wrap_increments_cycle():
    state = PhaseState.from_phase(TWO_PI - 1e-6, cycle_count=3)
    after = advance_phase(state, 2.0, 0.002)
    assert after.cycle_count == 4
    assert 0.0 <= after.phase < 0.03


def test_250_ticks_is_exactly_one_cycle():
    state = PhaseState()
    for _ in range(250):
        state = advance_phase(state, 2.0, 0.002)
    assert state.cycle_count == 1
    assert min(state.phase, TWO_PI - state.phase) < 1e-9


def test_249_ticks_is_not_a_cycle():
    state = PhaseState()
    for _ in range(249):
        state = advance_phase(state, 2.0, 0.002)
    assert state.cycle_count == 0


def test_frequency_clamped_to_bounds():
    state = advance_phase(PhaseState(), 10.0, 0.01, bounds=(1.0, 4.0))
    assert state.stepping_frequency == 4.0
    assert state.turns == pytest.approx(0.04)
    with pytest.raises(ValueError):
        advance_phase(PhaseState(), 2.0, 0.0)


def test_period_is_one_over_frequency():
    for f in (1.0, 1.66, 2.5, 4.0):
        dt = 0.002
        state, ticks = PhaseState(), 0
        while state.cycle_count < 1:
            state = advance_phase(state, f, dt)
            ticks += 1
        assert abs(ticks * dt - 1.0 / f) <= dt


def test_pronking_contacts():
    gait = preset_gait("pronking")
    assert desired_contact_state(gait, PI / 2).tolist() == [True] * 4
    assert desired_contact_state(gait, 3 * PI / 2).tolist() == [False] * 4
    assert desired_contact_state(gait, 0.0).tolist() == [True] * 4
    assert desired_contact_state(gait, PI).tolist() == [False] * 4


def test_bounding_contacts_and_air_phases():
    gait = preset_gait("bounding")
    assert desired_contact_state(gait, 0.3 * PI).tolist() == [True, True, False, False]
    assert desired_contact_state(gait, 1.2 * PI).tolist() == [False, False, True, True]
    phis = np.linspace(0, TWO_PI, 4000, endpoint=False)
    states = np.array([desired_contact_state(gait, p) for p in phis])
    front, rear = states[:, 0], states[:, 2]
    assert not np.any(front & rear)
    air = ~(front | rear)
    # count rising edges of the air indicator around the circle
    edges = np.sum(air & ~np.roll(air, 1))
    assert edges == 2


def test_contact_sequence_function_of_phase_only():
    gait = preset_gait("crawling")
    rng = np.random.default_rng(0)
    trace = rng.uniform(0, TWO_PI, 500)
    first = [desired_contact_state(gait, p).tolist() for p in trace]
    second = [desired_contact_state(gait, p).tolist() for p in trace]
    assert first == second


def test_additional_gaits_structure():
    trot = preset_gait("trotting")
    c = desired_contact_state(trot, 0.5)
    assert c[0] == c[3] and c[1] == c[2] and c[0] != c[1]
    pace = preset_gait("pacing")
    c = desired_contact_state(pace, 0.5)
    assert c[0] == c[2] and c[1] == c[3] and c[0] != c[1]
    crawl = preset_gait("crawling")
    for phi in np.linspace(0, TWO_PI, 97, endpoint=False):
        assert desired_contact_state(crawl, phi).sum() >= 3
    fly = preset_gait("fly_trotting")
    assert desired_contact_state(fly, 0.9 * PI).sum() == 0


def test_swing_progress():
    gait = preset_gait("pronking")
    assert swing_progress(gait, 1.5 * PI, 0) == pytest.approx(0.5)
    assert swing_progress(gait, PI, 2) == 0.0
    with pytest.raises(NotInSwing):
        swing_progress(gait, 0.5, 1)


def test_swing_progress_monotone_over_swing():
    for name in ("pronking", "bounding", "crawling"):
        gait = preset_gait(name)
        for leg in range(4):
            values = []
            for phi in np.linspace(0, TWO_PI, 1000, endpoint=False):
                try:
                    values.append(swing_progress(gait, phi, leg))
                except NotInSwing:
                    if values:
                        assert np.all(np.diff(values) >= 0)
                    values = []
            # a swing running across phi = 0 continues into the next loop
            assert all(0.0 <= v < 1.0 for v in values)


def test_swing_wrapping_past_zero_is_continuous():
    gait = preset_gait("crawling")
    # FL stance windows [0, pi) and [1.5 pi, 2 pi) merge across zero
    assert stance_intervals(gait, 1) == [(pytest.approx(1.5 * PI), pytest.approx(1.5 * PI))]
    assert swing_progress(gait, 1.25 * PI, 1) == pytest.approx(0.5)


def test_stance_duration():
    gait = preset_gait("pronking")
    assert estimate_stance_duration(gait, 2.0, 0) == pytest.approx(0.25)
    assert estimate_stance_duration(gait, 4.0, 0) == pytest.approx(0.125)
    for name in ("pronking", "bounding", "trotting", "crawling"):
        g = preset_gait(name)
        for leg in range(4):
            assert estimate_stance_duration(g, 3.0, leg) == pytest.approx(estimate_stance_duration(g, 1.5, leg) / 2)
    with pytest.raises(ValueError):
        estimate_stance_duration(gait, 0.0, 0)


def test_config_validation():
    with pytest.raises(ConfigError):
        GaitConfig(name="pronking", stance_windows=[[(0, 1)]] * 3)
    with pytest.raises(ConfigError):
        GaitConfig(name="pronking", stance_windows=[[(0, 7)]] * 4)
    with pytest.raises(ConfigError):
        GaitConfig(name="pronking", stance_windows=[[(0, 2), (1, 3)]] * 4)
    with pytest.raises(ConfigError):
        GaitConfig(name="galloping", stance_windows=[[(0, 1)]] * 4)
    with pytest.raises(ConfigError):
        preset_gait("pronking", default_frequency=5.0)


def test_dict_round_trip_and_preset_override():
    gait = preset_gait("bounding")
    assert GaitConfig.from_dict(gait.to_dict()) == gait
    custom = GaitConfig.from_dict({"preset": "pronking", "default_frequency": 3.0})
    assert custom.default_frequency == 3.0
    assert custom.stance_windows == preset_gait("pronking").stance_windows
    with pytest.raises(ConfigError, match="gait.speed"):
        GaitConfig.from_dict({"speed": 1})
