import math

import numpy as np
import pytest

from jumpctl.controller import ActionBounds
from jumpctl.dynamics import rotation_from_rpy
from jumpctl.gait import PhaseState, advance_phase
from jumpctl.reward import REWARD_TERMS, CycleAccumulator, RewardInputs, compute_reward

# weights and signs retyped here rather than imported
ORACLE_TABLE = [
    ("upright", 0.02, +1),
    ("base_height", 0.01, +1),
    ("contact_consistency", 0.008, +1),
    ("foot_slipping", 0.032, -1),
    ("foot_clearance", 0.008, +1),
    ("knee_contact", 0.064, -1),
    ("stepping_frequency", 0.008, +1),
    ("distance_to_goal", 0.016, -1),
    ("out_of_bound_action", 0.01, -1),
]


def oracle_reward(R, p, c, c_hat, v_feet, z_feet, kc, f, goal, excess, norm):
    terms = {}
    terms["upright"] = R[2][2]
    terms["base_height"] = p[2]
    matches = 0
    for i in range(4):
        if bool(c[i]) == bool(c_hat[i]):
            matches += 1
    terms["contact_consistency"] = matches
    slip = 0.0
    for i in range(4):
        if c_hat[i]:
            slip += math.sqrt(v_feet[i][0] ** 2 + v_feet[i][1] ** 2)
    terms["foot_slipping"] = slip
    clear = 0.0
    for i in range(4):
        if not c_hat[i]:
            clear += min(z_feet[i], 0.02)
    terms["foot_clearance"] = clear
    terms["knee_contact"] = sum(1 for k in kc if k)
    terms["stepping_frequency"] = 1.5 - min(max(f, 1.5), 4.0)
    terms["distance_to_goal"] = math.sqrt((p[0] - goal[0]) ** 2 + (p[1] - goal[1]) ** 2)
    terms["out_of_bound_action"] = excess
    total = 0.0
    for name, w, s in ORACLE_TABLE:
        total += w * s * terms[name]
    return terms, total * norm


def random_inputs(rng):
    return dict(
        rotation=rotation_from_rpy(rng.uniform(-1, 1, 3)),
        base_position=rng.normal(0, 1, 3),
        contacts=rng.random(4) < 0.5,
        desired_contacts=rng.random(4) < 0.5,
        foot_velocities=rng.normal(0, 1, (4, 3)),
        foot_heights=rng.uniform(-0.01, 0.1, 4),
        knee_contacts=rng.random(4) < 0.2,
        f_step=rng.uniform(0.5, 5.0),
        goal=rng.normal(0, 2, 2),
        action_excess=rng.uniform(0, 1) * (rng.random() < 0.5),
    )


def test_matches_oracle_on_1000_random_states():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        kw = random_inputs(rng)
        norm = rng.uniform(0, 0.2)
        got = compute_reward(RewardInputs(**kw), norm)
        terms, total = oracle_reward(
            kw["rotation"], kw["base_position"], kw["contacts"], kw["desired_contacts"], kw["foot_velocities"],
            kw["foot_heights"], kw["knee_contacts"], kw["f_step"], kw["goal"], kw["action_excess"], norm,
        )
        for name in REWARD_TERMS:
            assert got.terms[name] == pytest.approx(terms[name], abs=1e-12)
        assert got.total == pytest.approx(total, abs=1e-12)


def _nominal(**overrides):
    kw = dict(
        rotation=np.eye(3),
        base_position=np.zeros(3),
        contacts=np.ones(4, dtype=bool),
        desired_contacts=np.ones(4, dtype=bool),
        foot_velocities=np.zeros((4, 3)),
        foot_heights=np.zeros(4),
        knee_contacts=np.zeros(4, dtype=bool),
        f_step=1.5,
        goal=np.zeros(2),
    )
    kw.update(overrides)
    return RewardInputs(**kw)


def test_examples():
    norm = 0.037
    r = compute_reward(_nominal(), norm)
    assert r.terms["upright"] == 1.0
    assert r.weighted["upright"] * norm == pytest.approx(0.02 * norm, abs=1e-15)
    assert r.terms["contact_consistency"] == 4.0
    assert r.weighted["contact_consistency"] * norm == pytest.approx(0.032 * norm, abs=1e-15)
    r = compute_reward(_nominal(f_step=2.0), norm)
    assert r.terms["stepping_frequency"] == pytest.approx(-0.5)
    assert r.weighted["stepping_frequency"] * norm == pytest.approx(-0.004 * norm, abs=1e-15)


def test_clearance_capped_and_only_for_swing_feet():
    r = compute_reward(_nominal(desired_contacts=np.array([False, False, True, True]), foot_heights=np.array([0.5, 0.01, 0.5, 0.5])), 1.0)
    assert r.terms["foot_clearance"] == pytest.approx(0.03)


def test_out_of_bound_zero_at_bounds():
    bounds = ActionBounds.default()
    for vec in (bounds.lower, bounds.upper):
        _, excess = bounds.clamp(vec)
        assert excess == 0.0
        assert compute_reward(_nominal(action_excess=excess), 1.0).terms["out_of_bound_action"] == 0.0


def test_signs_follow_penalised_direction():
    base = compute_reward(_nominal(), 1.0).rate
    assert compute_reward(_nominal(foot_velocities=np.ones((4, 3))), 1.0).rate < base
    assert compute_reward(_nominal(knee_contacts=np.ones(4, dtype=bool)), 1.0).rate < base
    assert compute_reward(_nominal(goal=np.array([1.0, 0.0])), 1.0).rate < base
    assert compute_reward(_nominal(action_excess=0.3), 1.0).rate < base


def _cycle_totals(f_step, rate, cycles, dt_high=0.01):
    acc, phase = CycleAccumulator(), PhaseState(0.0, f_step)
    while len(acc.totals) < cycles:
        after = advance_phase(phase, f_step, dt_high)
        norm = after.turns - phase.turns
        assert norm == pytest.approx(f_step * dt_high, abs=1e-12)
        boundaries = list(range(phase.cycle_count + 1, after.cycle_count + 1))
        acc.add(rate, phase.turns, after.turns, boundaries)
        phase = after
    return np.array(acc.totals[:cycles])


def test_cycle_totals_independent_of_duration():
    inputs = _nominal(f_step=2.0, goal=np.array([0.4, 0.1]), desired_contacts=np.array([True, False, True, False]))
    rate = compute_reward(inputs, 1.0).rate
    slow = _cycle_totals(1.66, rate, 6)
    fast = _cycle_totals(3.32, rate, 6)
    np.testing.assert_allclose(slow, fast, atol=1e-6)
    np.testing.assert_allclose(slow, rate, atol=1e-9)


def test_alive_bonus_added_when_enabled():
    r = compute_reward(_nominal(), 0.5, alive_bonus=0.02)
    assert r.total == pytest.approx(0.5 * (sum(r.weighted.values()) + 0.02))
