"""Low-level leg controller, run at every simulation tick.

Stance legs: CoM PD -> GRF solve (closed form + clip, or QP) -> ``J^T f``.
Swing legs: quadratic reference through lift-off, mid-air and Raibert landing
key points, plus the policy residual, converted to joint targets with IK.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gait as gaitmod
from .dynamics import CentroidalState, build_centroidal_dynamics, rot_z, world_to_base_accel
from .grf import SolverWeights, clip_flags, clip_to_friction_cone, solve_grf_closed_form, solve_grf_qp
from .kinematics import clamp_to_workspace, inverse_kinematics, torque_from_grf
from .model import ConfigError, RobotModel

GRF_MODES = ("closed_form", "qp")
ACTION_SIZE = 16
NO_GAIT_FREQUENCY = 1.66


@dataclass(frozen=True, eq=False)
class CentroidalAction:
    """High-level command held for one policy step.

    Sagittal velocity targets are expressed in the heading (yaw-aligned)
    frame; swing residuals likewise, one 3-vector per leg.
    """

    f_step: float = 2.0
    v_x: float = 0.0
    v_z: float = 0.0
    w_y: float = 0.0
    residuals: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))

    def __post_init__(self):
        res = np.array(self.residuals, dtype=float).reshape(4, 3)
        res.setflags(write=False)
        object.__setattr__(self, "residuals", res)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.f_step, self.v_x, self.v_z, self.w_y], self.residuals.ravel()])

    @classmethod
    def from_vector(cls, vec) -> "CentroidalAction":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (ACTION_SIZE,):
            raise ValueError(f"action vector must have {ACTION_SIZE} entries, got {vec.shape}")
        return cls(f_step=float(vec[0]), v_x=float(vec[1]), v_z=float(vec[2]), w_y=float(vec[3]), residuals=vec[4:])


@dataclass(frozen=True, eq=False)
class ActionBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).reshape(ACTION_SIZE)
        hi = np.array(self.upper, dtype=float).reshape(ACTION_SIZE)
        if np.any(lo > hi):
            raise ConfigError("env.action_bounds", "lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def default(cls, frequency_bounds=(1.0, 4.0)) -> "ActionBounds":
        res_lo = np.tile([-0.1, -0.1, -0.1], 4)
        res_hi = np.tile([0.1, 0.1, 0.25], 4)
        lo = np.concatenate([[frequency_bounds[0], -1.0, -3.0, -3.0], res_lo])
        hi = np.concatenate([[frequency_bounds[1], 3.0, 3.0, 3.0], res_hi])
        return cls(lo, hi)

    def clamp(self, raw) -> tuple[np.ndarray, float]:
        """Clamp a raw action; returns ``(clamped, normalised excess)``.

        The excess is the sum over dimensions of the out-of-bound amount
        divided by that dimension's range.
        """
        raw = np.asarray(raw, dtype=float)
        clamped = np.clip(raw, self.lower, self.upper)
        span = np.maximum(self.upper - self.lower, 1e-12)
        excess = float(np.sum(np.abs(raw - clamped) / span))
        return clamped, excess


@dataclass(frozen=True, eq=False)
class ControllerConfig:
    mode: str = "closed_form"
    weights: SolverWeights = field(default_factory=SolverWeights)
    # PD gains in [p, Theta] / [v, omega] order; only roll has a position gain
    kp: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.0, 50.0, 0.0, 0.0]))
    kd: np.ndarray = field(default_factory=lambda: np.full(6, 10.0))
    swing_kp: float = 30.0
    swing_kd: float = 1.0
    no_swing: bool = False
    no_swing_ref: bool = False

    def __post_init__(self):
        if self.mode not in GRF_MODES:
            raise ConfigError("solver.mode", f"expected one of {GRF_MODES}")
        object.__setattr__(self, "kp", np.array(self.kp, dtype=float).reshape(6))
        object.__setattr__(self, "kd", np.array(self.kd, dtype=float).reshape(6))


@dataclass(frozen=True, eq=False)
class GrfSolution:
    """Stance forces in the base frame; rows of swing legs are zero."""

    forces: np.ndarray
    stance_mask: np.ndarray
    unclipped: np.ndarray
    normal_clipped: np.ndarray
    tangential_scaled: np.ndarray
    desired_acceleration: np.ndarray
    achieved_acceleration: np.ndarray

    @classmethod
    def empty(cls, g_base=None) -> "GrfSolution":
        zeros = np.zeros((4, 3))
        acc = np.zeros(6) if g_base is None else np.asarray(g_base, dtype=float)
        none = np.zeros(4, dtype=bool)
        return cls(zeros, none, zeros, none, none.copy(), np.zeros(6), acc)


@dataclass(frozen=True, eq=False)
class StanceTorque:
    torque: np.ndarray
    saturated: bool = False


@dataclass(frozen=True, eq=False)
class SwingPosition:
    joint_angles: np.ndarray
    kp: float
    kd: float
    target_world: np.ndarray
    clamped: bool = False


def com_pd(state: CentroidalState, action: CentroidalAction, kp, kd) -> np.ndarray:
    """Desired base acceleration in ``[omega_dot; p_ddot]`` order, world frame.

    The reference pose is the current pose with zero roll; the reference
    velocity carries the sagittal commands rotated by the current yaw.
    """
    yaw = state.rpy[2]
    heading = rot_z(yaw)
    pose_ref = state.pose.copy()
    pose_ref[3] = 0.0
    twist_ref = np.concatenate([heading @ [action.v_x, 0.0, action.v_z], heading @ [0.0, action.w_y, 0.0]])
    acc = np.asarray(kp) * (pose_ref - state.pose) + np.asarray(kd) * (twist_ref - state.twist)
    return np.concatenate([acc[3:], acc[:3]])


def solve_stance_forces(model: RobotModel, state: CentroidalState, stance_mask, qdd_ref_world, config: ControllerConfig) -> GrfSolution:
    """GRFs for the stance legs tracking a world-frame ``[omega_dot; p_ddot]``."""
    mask = np.asarray(stance_mask, dtype=bool)
    A, g = build_centroidal_dynamics(model, state, mask)
    R = state.rotation
    qdd_ref = world_to_base_accel(qdd_ref_world, R)
    if not mask.any():
        return GrfSolution.empty(g)
    U, V = config.weights.U, config.weights.v_block(mask)
    if config.mode == "qp":
        f_hat = solve_grf_qp(A, g, qdd_ref, U, V, model.friction_mu, model.f_min, model.f_max)
        f = f_hat
    else:
        f_hat = solve_grf_closed_form(A, g, qdd_ref, U, V)
        f = clip_to_friction_cone(f_hat, model.friction_mu, model.f_min, model.f_max)
    normal, tangential = clip_flags(f_hat, f)
    forces = np.zeros((4, 3))
    unclipped = np.zeros((4, 3))
    forces[mask] = f.reshape(-1, 3)
    unclipped[mask] = f_hat.reshape(-1, 3)
    n_flags = np.zeros(4, dtype=bool)
    t_flags = np.zeros(4, dtype=bool)
    n_flags[mask] = normal
    t_flags[mask] = tangential
    return GrfSolution(forces, mask, unclipped, n_flags, t_flags, qdd_ref, A @ f + g)


def stance_leg_command(
    model: RobotModel,
    state: CentroidalState,
    joint_angles,
    action: CentroidalAction,
    stance_mask,
    config: ControllerConfig,
) -> tuple[dict, GrfSolution]:
    """Torque commands ``{leg: StanceTorque}`` for the stance legs."""
    qdd_ref = com_pd(state, action, config.kp, config.kd)
    solution = solve_stance_forces(model, state, stance_mask, qdd_ref, config)
    joint_angles = np.asarray(joint_angles, dtype=float).reshape(4, 3)
    commands = {}
    for leg in np.flatnonzero(solution.stance_mask):
        tau, saturated = torque_from_grf(model, leg, joint_angles[leg], solution.forces[leg])
        commands[int(leg)] = StanceTorque(tau, saturated)
    return commands, solution


def raibert_landing_target(hip_xy, v_com_xy, t_stance: float) -> np.ndarray:
    """Landing point giving equal fore/aft travel over the next stance."""
    if t_stance <= 0:
        raise ValueError("t_stance must be positive")
    return np.asarray(hip_xy, dtype=float) + np.asarray(v_com_xy, dtype=float) * t_stance / 2.0


def swing_reference(p_liftoff, p_air, p_land, s: float) -> np.ndarray:
    """Quadratic through ``(0, p_liftoff)``, ``(0.5, p_air)``, ``(1, p_land)``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("swing progress must lie in [0, 1]")
    w0 = 2.0 * (s - 0.5) * (s - 1.0)
    w1 = -4.0 * s * (s - 1.0)
    w2 = 2.0 * s * (s - 0.5)
    return w0 * np.asarray(p_liftoff, dtype=float) + w1 * np.asarray(p_air, dtype=float) + w2 * np.asarray(p_land, dtype=float)


def swing_target_world(
    model: RobotModel,
    state: CentroidalState,
    gait: gaitmod.GaitConfig,
    phi: float,
    s: float,
    leg: int,
    action: CentroidalAction,
    p_liftoff,
    config: ControllerConfig,
    ground_height: float = 0.0,
) -> np.ndarray:
    """World-frame swing foot target for progress ``s`` (reference + residual)."""
    R = state.rotation
    hip = state.position + R @ model.hip_offsets[leg]
    p_air = np.array([hip[0], hip[1], ground_height])
    if config.no_swing_ref:
        reference = p_air
    else:
        t_stance = gaitmod.estimate_stance_duration(gait, action.f_step, leg, phi)
        if t_stance > 0:
            land_xy = raibert_landing_target(hip[:2], state.velocity[:2], t_stance)
        else:
            land_xy = hip[:2]
        p_land = np.array([land_xy[0], land_xy[1], ground_height])
        reference = swing_reference(p_liftoff, p_air, p_land, s)
    residual = np.zeros(3) if config.no_swing else rot_z(state.rpy[2]) @ action.residuals[leg]
    target = reference + residual
    target[2] = max(target[2], ground_height)
    return target


def swing_leg_command(
    model: RobotModel,
    state: CentroidalState,
    gait: gaitmod.GaitConfig,
    phi: float,
    leg: int,
    action: CentroidalAction,
    p_liftoff,
    config: ControllerConfig,
    ground_height: float = 0.0,
    s: float | None = None,
) -> SwingPosition:
    """Joint position command for a swing leg.

    ``s`` defaults to the gait's swing progress at ``phi``; pass ``s=1`` to hold
    the landing target for a leg whose stance window has begun before touchdown.
    """
    if s is None:
        s = gaitmod.swing_progress(gait, phi, leg)
    target = swing_target_world(model, state, gait, phi, s, leg, action, p_liftoff, config, ground_height)
    R = state.rotation
    local, clamped = clamp_to_workspace(model, leg, R.T @ (target - state.position))
    angles = inverse_kinematics(model, leg, local)
    realized = state.position + R @ local
    return SwingPosition(angles, config.swing_kp, config.swing_kd, realized, clamped)
