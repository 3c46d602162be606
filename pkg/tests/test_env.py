import functools
import math

import numpy as np
import pytest
from scipy import stats

from jumpctl.controller import ActionBounds
from jumpctl.dynamics import rot_z
from jumpctl.env import (
    EnvConfig,
    HeuristicPolicy,
    JumpEnv,
    Observation,
    ReplayPolicy,
    SteppedAfterDone,
    batch_rollout,
    build_observation,
    episode_seeds,
    heuristic_factory,
    run_episode,
)
from jumpctl.gait import preset_gait
from jumpctl.kinematics import forward_kinematics
from jumpctl.model import ConfigError
from jumpctl.simulator import SimState, nominal_joint_angles

SHORT = functools.partial(JumpEnv, config=EnvConfig(num_cycles=2))


def same_episode(a, b):
    return (
        a.seed == b.seed
        and a.total_return == b.total_return
        and a.displacement == b.displacement
        and a.reason == b.reason
        and a.steps == b.steps
        and a.term_means == b.term_means
        and a.cycle_flight == b.cycle_flight
    )


def test_config_validation():
    with pytest.raises(ConfigError, match="env.weights"):
        EnvConfig(weights={"upright": 1.0})
    with pytest.raises(ConfigError, match="env.phase_encoding"):
        EnvConfig(phase_encoding="degrees")
    with pytest.raises(ConfigError, match="env.goal_range"):
        EnvConfig(goal_range=(1.0, 0.3))


def test_reset_deterministic():
    env = JumpEnv()
    _, _, a = env.reset(42)
    _, _, b = env.reset(42)
    np.testing.assert_array_equal(a.to_vector(), b.to_vector())
    _, _, c = env.reset(43)
    assert not np.array_equal(a.goal_ego, c.goal_ego)


def test_goal_distance_uniform_over_10k_resets():
    env = JumpEnv()
    dist = []
    for seed in range(10_000):
        _, episode, _ = env.reset(seed)
        d = episode.goal - env.sim.centroidal.position[:2]
        assert d[1] == 0.0
        dist.append(d[0])
    dist = np.array(dist)
    assert dist.min() >= 0.3 and dist.max() <= 1.0
    assert stats.kstest(dist, stats.uniform(loc=0.3, scale=0.7).cdf).pvalue > 0.01


def test_initial_pose():
    env = JumpEnv()
    sim, episode, obs = env.reset(0)
    assert episode.cycles_completed == 0 and env.phase.phase == 0.0
    angles = nominal_joint_angles(env.model, 0.28)
    p = sim.centroidal.position
    for leg in range(4):
        np.testing.assert_allclose(sim.centroidal.foot_positions[leg], p + forward_kinematics(env.model, leg, angles[leg]), atol=1e-12)
    np.testing.assert_allclose(obs.phase_features(), [0.0, 1.0])


def test_forced_low_height_terminates_with_reason_height():
    env = JumpEnv()
    env.reset(0)
    sim = env.sim
    low = sim.centroidal.replace(position=sim.centroidal.position - [0, 0, 0.18])
    env.sim = SimState(**{**sim.__dict__, "centroidal": low})
    _, reward, done, info = env.step(np.array([2.0] + [0.0] * 15))
    assert done and info["reason"] == "height"
    # reward for the terminal step was still produced
    assert math.isfinite(reward.total) and env.episode.steps == 1
    with pytest.raises(SteppedAfterDone):
        env.step(np.zeros(16))


def test_ten_cycles_then_done_and_one_goal_per_boundary():
    env = JumpEnv()
    policy = HeuristicPolicy(env.gait)
    _, episode, obs = env.reset(3)
    goals = [episode.goal.copy()]
    done = False
    while not done:
        obs, _, done, info = env.step(policy(obs))
        if info["cycle_boundary"]:
            goals.append(episode.goal.copy())
        else:
            assert np.array_equal(episode.goal, goals[-1])
    assert info["reason"] == "cycles_complete"
    assert episode.cycles_completed == 10
    assert len(goals) == 11


def test_action_exactly_at_bounds_has_no_excess():
    env = JumpEnv()
    env.reset(0)
    bounds = ActionBounds.default()
    _, reward, _, info = env.step(bounds.upper)
    assert info["action_excess"] == 0.0
    assert reward.terms["out_of_bound_action"] == 0.0


def _transform_state(sim, yaw, shift):
    Rz = rot_z(yaw)
    c = sim.centroidal
    moved = c.replace(
        position=Rz @ c.position + shift,
        rpy=c.rpy + [0.0, 0.0, yaw],
        velocity=Rz @ c.velocity,
        angular_velocity=Rz @ c.angular_velocity,
        foot_positions=c.foot_positions @ Rz.T + shift,
    )
    return SimState(**{**sim.__dict__, "centroidal": moved})


def test_observation_invariant_to_yaw_and_translation():
    env = JumpEnv()
    policy = HeuristicPolicy(env.gait)
    _, episode, obs = env.reset(1)
    for _ in range(37):
        obs, *_ = env.step(policy(obs))
    rng = np.random.default_rng(0)
    base = build_observation(env.sim, env.phase.phase, episode.goal).to_vector(include_absolute=False)
    for _ in range(50):
        yaw = rng.uniform(-math.pi, math.pi)
        shift = np.array([*rng.normal(0, 10, 2), 0.0])
        goal = (rot_z(yaw) @ [*episode.goal, 0.0] + shift)[:2]
        moved = build_observation(_transform_state(env.sim, yaw, shift), env.phase.phase, goal)
        np.testing.assert_allclose(moved.to_vector(include_absolute=False), base, atol=1e-9)


def _obs(goal_x, phase=0.0):
    return Observation(
        base_position=np.array([0.0, 0.0, 0.28]),
        base_rpy=np.zeros(3),
        base_velocity=np.zeros(3),
        base_angular_velocity=np.zeros(3),
        feet_base=np.zeros((4, 3)),
        phase=phase,
        goal_ego=np.array([goal_x, 0.0]),
    )


def test_heuristic_sign_contracts():
    policy = HeuristicPolicy(preset_gait("pronking"))
    ahead = policy.action(_obs(1.0))
    assert ahead.v_x > 0 and ahead.v_z > 0
    behind = policy.action(_obs(-1.0))
    assert behind.v_x <= 0
    flight = policy.action(_obs(1.0, phase=1.5 * math.pi))
    assert flight.v_x == 0 and flight.v_z == 0
    assert np.all(flight.residuals[:, 2] > 0)
    assert ahead.f_step == policy.f_step


def test_heuristic_rollout_flies_every_cycle():
    env = JumpEnv()
    result = run_episode(env, HeuristicPolicy(env.gait), seed=0)
    assert result.reason == "cycles_complete"
    assert result.cycles == 10
    assert result.cycle_flight == [True] * 10
    assert result.displacement > 0


def test_replay_reproduces_episode():
    env = SHORT()
    first = run_episode(env, heuristic_factory(env), seed=5, record=True)
    actions = [r[-16:] for r in first.rows[::5]]
    replay = run_episode(SHORT(), ReplayPolicy(actions), seed=5, record=True)
    assert same_episode(first, replay)
    assert np.array_equal(np.array(first.rows, dtype=float), np.array(replay.rows, dtype=float))


def test_batch_of_one_equals_sequential():
    batch = batch_rollout(1, SHORT, seed=11)
    env = SHORT()
    seq = run_episode(env, heuristic_factory(env), episode_seeds(11, 1)[0])
    assert same_episode(batch.episodes[0], seq)
    assert batch.info["wall_clock"] > 0 and "episodes_per_second" in batch.info


def test_doubling_batch_keeps_episodes():
    small = batch_rollout(2, SHORT, seed=7)
    large = batch_rollout(4, SHORT, seed=7)
    for a, b in zip(small.episodes, large.episodes):
        assert same_episode(a, b)
    assert len({e.seed for e in large.episodes}) == 4


def test_parallel_equals_serial():
    serial = batch_rollout(2, SHORT, seed=3)
    parallel = batch_rollout(2, SHORT, seed=3, n_jobs=2)
    assert parallel.info["n_jobs"] == 2
    for a, b in zip(serial.episodes, parallel.episodes):
        assert same_episode(a, b)


def test_batch_requires_at_least_one_env():
    with pytest.raises(ValueError):
        batch_rollout(0, SHORT)
