import math

import numpy as np
import pytest

from jumpctl.controller import (
    ActionBounds,
    CentroidalAction,
    ControllerConfig,
    com_pd,
    raibert_landing_target,
    solve_stance_forces,
    stance_leg_command,
    swing_leg_command,
    swing_reference,
    swing_target_world,
)
from jumpctl.dynamics import CentroidalState
from jumpctl.gait import estimate_stance_duration, preset_gait
from jumpctl.grf import SolverWeights
from jumpctl.kinematics import foot_jacobian, forward_kinematics
from jumpctl.model import ConfigError, RobotModel
from jumpctl.simulator import standing_state

KP = np.array([0, 0, 0, 50.0, 0, 0])
KD = np.full(6, 10.0)


def test_pd_roll_only_position_gain():
    state = CentroidalState(position=[0, 0, 0.3], rpy=[0.1, 0, 0])
    acc = com_pd(state, CentroidalAction(), KP, KD)
    np.testing.assert_allclose(acc, [-5.0, 0, 0, 0, 0, 0], atol=1e-15)


def test_pd_fixed_point():
    state = CentroidalState(position=[1, 2, 0.3], rpy=[0, 0.2, 0.4], velocity=[0.5 * math.cos(0.4), 0.5 * math.sin(0.4), 0.1])
    action = CentroidalAction(v_x=0.5, v_z=0.1)
    np.testing.assert_allclose(com_pd(state, action, KP, KD), 0.0, atol=1e-15)


def test_pd_forward_velocity_command():
    acc = com_pd(CentroidalState(), CentroidalAction(v_x=1.0), KP, KD)
    np.testing.assert_allclose(acc, [0, 0, 0, 10.0, 0, 0], atol=1e-15)


def test_pd_velocity_command_follows_heading():
    yaw = 0.7
    acc = com_pd(CentroidalState(rpy=[0, 0, yaw]), CentroidalAction(v_x=1.0, w_y=0.5), KP, KD)
    np.testing.assert_allclose(acc[3:], [10 * math.cos(yaw), 10 * math.sin(yaw), 0], atol=1e-14)
    np.testing.assert_allclose(acc[:3], [-5 * math.sin(yaw), 5 * math.cos(yaw), 0], atol=1e-14)


def test_action_vector_round_trip_and_bounds():
    vec = np.arange(16.0) / 10
    assert np.array_equal(CentroidalAction.from_vector(vec).to_vector(), vec)
    with pytest.raises(ValueError):
        CentroidalAction.from_vector(np.zeros(5))
    bounds = ActionBounds.default()
    clamped, excess = bounds.clamp(bounds.upper)
    assert excess == 0.0
    np.testing.assert_array_equal(clamped, bounds.upper)
    raw = bounds.upper.copy()
    raw[1] += 2.0  # v_x range is 4 m/s wide
    _, excess = bounds.clamp(raw)
    assert excess == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        ActionBounds(np.ones(16), np.zeros(16))


def test_default_action_bounds_values():
    b = ActionBounds.default()
    np.testing.assert_array_equal(b.lower[:4], [1.0, -1.0, -3.0, -3.0])
    np.testing.assert_array_equal(b.upper[:4], [4.0, 3.0, 3.0, 3.0])
    np.testing.assert_array_equal(b.lower[4:].reshape(4, 3), np.tile([-0.1, -0.1, -0.1], (4, 1)))
    np.testing.assert_array_equal(b.upper[4:].reshape(4, 3), np.tile([0.1, 0.1, 0.25], (4, 1)))


def test_hover_torques_hold_weight():
    model = RobotModel()
    sim = standing_state(model)
    config = ControllerConfig(weights=SolverWeights.uniform(1e-6, np.eye(6)))
    commands, sol = stance_leg_command(model, sim.centroidal, sim.joint_angles, CentroidalAction(), np.ones(4, dtype=bool), config)
    assert sorted(commands) == [0, 1, 2, 3]
    np.testing.assert_allclose(sol.forces[:, 2], 12 * 9.81 / 4, rtol=5e-3)
    for leg, cmd in commands.items():
        J = foot_jacobian(model, leg, sim.joint_angles[leg])
        np.testing.assert_allclose(cmd.torque, J.T @ sol.forces[leg], atol=1e-12)
        # zero joint velocity -> zero mechanical power
        assert cmd.torque @ np.zeros(3) == 0.0
        assert not cmd.saturated


def test_qp_and_closed_form_torques_agree_when_interior():
    model = RobotModel()
    sim = standing_state(model)
    action = CentroidalAction(v_x=0.2, v_z=0.1)
    stance = np.ones(4, dtype=bool)
    cf, sol_cf = stance_leg_command(model, sim.centroidal, sim.joint_angles, action, stance, ControllerConfig())
    qp, sol_qp = stance_leg_command(model, sim.centroidal, sim.joint_angles, action, stance, ControllerConfig(mode="qp"))
    assert not sol_cf.normal_clipped.any() and not sol_cf.tangential_scaled.any()
    for leg in range(4):
        np.testing.assert_allclose(cf[leg].torque, qp[leg].torque, atol=1e-5)


def test_zero_stance_gives_empty_commands():
    model = RobotModel()
    sim = standing_state(model)
    commands, sol = stance_leg_command(model, sim.centroidal, sim.joint_angles, CentroidalAction(), np.zeros(4, dtype=bool), ControllerConfig())
    assert commands == {}
    np.testing.assert_array_equal(sol.forces, 0.0)
    np.testing.assert_allclose(sol.achieved_acceleration, [0, 0, 0, 0, 0, -9.81])


def test_emitted_forces_inside_cone():
    model = RobotModel()
    rng = np.random.default_rng(0)
    sim = standing_state(model)
    for _ in range(300):
        state = sim.centroidal.replace(rpy=rng.uniform(-0.3, 0.3, 3), velocity=rng.normal(0, 2, 3), angular_velocity=rng.normal(0, 2, 3))
        stance = rng.random(4) < 0.6
        sol = solve_stance_forces(model, state, stance, rng.normal(0, 20, 6), ControllerConfig())
        f = sol.forces[stance]
        assert np.all((f[:, 2] >= model.f_min) & (f[:, 2] <= model.f_max))
        assert np.all(np.hypot(f[:, 0], f[:, 1]) <= model.friction_mu * f[:, 2] + 1e-9)
        np.testing.assert_array_equal(sol.forces[~stance], 0.0)


def test_raibert_examples():
    np.testing.assert_allclose(raibert_landing_target([0.3, 0.1], [1.0, 0.0], 0.3), [0.45, 0.1], atol=1e-15)
    np.testing.assert_array_equal(raibert_landing_target([0.3, 0.1], [0.0, 0.0], 0.3), [0.3, 0.1])
    d1 = raibert_landing_target([0, 0], [0.7, -0.2], 0.2)
    d2 = raibert_landing_target([0, 0], [0.7, -0.2], 0.4)
    np.testing.assert_allclose(d2, 2 * d1, atol=1e-15)
    with pytest.raises(ValueError):
        raibert_landing_target([0, 0], [1, 0], 0.0)


def vandermonde_quadratic(knots_s, values, s):
    M = np.vander(knots_s, 3)
    coeffs = np.linalg.solve(M, values)
    return np.polyval(coeffs, s)


def test_swing_reference_knots_and_midpoint_value():
    z = swing_reference([0, 0, 0.0], [0, 0, 0.1], [0, 0, 0.0], 0.25)[2]
    assert z == pytest.approx(0.075, abs=1e-15)
    assert z == pytest.approx(vandermonde_quadratic([0.0, 0.5, 1.0], [0.0, 0.1, 0.0], 0.25), abs=1e-14)
    rng = np.random.default_rng(1)
    for _ in range(200):
        p0, p1, p2 = rng.normal(size=(3, 3))
        np.testing.assert_allclose(swing_reference(p0, p1, p2, 0.0), p0, atol=1e-12)
        np.testing.assert_allclose(swing_reference(p0, p1, p2, 0.5), p1, atol=1e-12)
        np.testing.assert_allclose(swing_reference(p0, p1, p2, 1.0), p2, atol=1e-12)
        s = rng.uniform()
        expected = [vandermonde_quadratic([0.0, 0.5, 1.0], [p0[k], p1[k], p2[k]], s) for k in range(3)]
        np.testing.assert_allclose(swing_reference(p0, p1, p2, s), expected, atol=1e-12)
    with pytest.raises(ValueError):
        swing_reference(p0, p1, p2, 1.5)


def test_swing_reference_collinear_is_linear():
    a, b = np.array([0.0, 0.0, 0.0]), np.array([1.0, 2.0, 0.5])
    for s in np.linspace(0, 1, 11):
        np.testing.assert_allclose(swing_reference(a, (a + b) / 2, b, s), a + s * (b - a), atol=1e-14)


def test_swing_reference_continuous():
    p0, p1, p2 = np.array([0, 0, 0.0]), np.array([0.1, 0, 0.1]), np.array([0.2, 0, 0.0])
    s = np.linspace(0, 1, 2001)
    path = np.array([swing_reference(p0, p1, p2, v) for v in s])
    assert np.max(np.abs(np.diff(path, axis=0))) < 1e-3


def _flight_state(model):
    sim = standing_state(model)
    state = sim.centroidal.replace(position=[0.0, 0.0, 0.33], velocity=[0.8, 0.1, 0.0])
    return sim, state


def test_swing_s1_zero_residual_lands_on_raibert_point():
    model = RobotModel()
    gait = preset_gait("pronking")
    sim, state = _flight_state(model)
    leg = 1
    phi = 1.5 * math.pi
    action = CentroidalAction()
    target = swing_target_world(model, state, gait, phi, 1.0, leg, action, sim.liftoff[leg], ControllerConfig())
    hip = state.position + state.rotation @ model.hip_offsets[leg]
    t_stance = estimate_stance_duration(gait, action.f_step, leg, phi)
    np.testing.assert_allclose(target[:2], hip[:2] + state.velocity[:2] * t_stance / 2, atol=1e-15)
    assert target[2] == 0.0


def test_swing_residual_raises_apex():
    model = RobotModel()
    gait = preset_gait("pronking")
    sim, state = _flight_state(model)
    res = np.zeros((4, 3))
    res[2] = [0, 0, 0.05]
    base = swing_target_world(model, state, gait, 1.5 * math.pi, 0.5, 2, CentroidalAction(), sim.liftoff[2], ControllerConfig())
    raised = swing_target_world(model, state, gait, 1.5 * math.pi, 0.5, 2, CentroidalAction(residuals=res), sim.liftoff[2], ControllerConfig())
    np.testing.assert_allclose(raised - base, [0, 0, 0.05], atol=1e-15)
    # the no-swing ablation drops the residual
    ablated = swing_target_world(model, state, gait, 1.5 * math.pi, 0.5, 2, CentroidalAction(residuals=res), sim.liftoff[2], ControllerConfig(no_swing=True))
    np.testing.assert_array_equal(ablated, base)


def test_no_swing_ref_uses_hip_projection_plus_residual():
    model = RobotModel()
    gait = preset_gait("pronking")
    sim, state = _flight_state(model)
    res = np.zeros((4, 3))
    res[0] = [0.02, -0.01, 0.04]
    target = swing_target_world(model, state, gait, 1.2 * math.pi, 0.3, 0, CentroidalAction(residuals=res), sim.liftoff[0], ControllerConfig(no_swing_ref=True))
    hip = state.position + state.rotation @ model.hip_offsets[0]
    np.testing.assert_allclose(target, [hip[0] + 0.02, hip[1] - 0.01, 0.04], atol=1e-15)


def test_swing_command_is_reachable_and_uses_gains():
    model = RobotModel()
    gait = preset_gait("pronking")
    sim, state = _flight_state(model)
    cmd = swing_leg_command(model, state, gait, 1.5 * math.pi, 3, CentroidalAction(), sim.liftoff[3], ControllerConfig(swing_kp=42.0))
    assert cmd.kp == 42.0 and cmd.kd == 1.0
    local = forward_kinematics(model, 3, cmd.joint_angles)
    np.testing.assert_allclose(state.position + state.rotation @ local, cmd.target_world, atol=1e-9)
