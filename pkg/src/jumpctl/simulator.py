"""Centroidal rigid-body simulator with gait-driven point-foot contact.

The simulated plant is the controller's own model: massless legs, point
feet, base driven by ``[omega_dot; p_ddot] = A f + g`` in the base frame.
Stance feet are pinned where they touched down; swing feet follow their
commanded targets kinematically. Integration is semi-implicit Euler
(velocities first, then poses).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gait as gaitmod
from .controller import CentroidalAction, ControllerConfig, GrfSolution, stance_leg_command, swing_leg_command
from .dynamics import PITCH_GUARD, CentroidalState, base_to_world_accel, euler_rates
from .kinematics import Unreachable, clamp_to_workspace, forward_kinematics, inverse_kinematics
from .model import SIDE_SIGN, ConfigError, RobotModel, with_payload

CONTACT_MODES = ("idealized", "physical")
# feet within this distance of the ground count as touching
GROUND_TOL = 1e-6
MAX_BASE_SPEED = 50.0


class SimDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class Perturbation:
    """Velocity kick applied once, at the first tick at or after ``start``."""

    start: float
    end: float
    delta_velocity: tuple = (0.0, 0.0, 0.0)
    delta_angular_velocity: tuple = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.002
    steps_per_action: int = 5
    ground_height: float = 0.0
    contact_mode: str = "idealized"
    payload_mass: float = 0.0
    perturbations: tuple = ()

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("sim.dt", "must be positive")
        if not (isinstance(self.steps_per_action, int) and self.steps_per_action >= 1):
            raise ConfigError("sim.steps_per_action", "must be an integer >= 1")
        if self.contact_mode not in CONTACT_MODES:
            raise ConfigError("sim.contact_mode", f"expected one of {CONTACT_MODES}")
        if self.payload_mass < 0:
            raise ConfigError("sim.payload_mass", "must be non-negative")
        perts = tuple(p if isinstance(p, Perturbation) else Perturbation(**p) for p in self.perturbations)
        object.__setattr__(self, "perturbations", perts)


@dataclass(frozen=True, eq=False)
class TickInfo:
    """What the controller did during the tick that produced a state."""

    desired_contacts: np.ndarray
    grf: GrfSolution
    torques: np.ndarray
    torque_saturated: np.ndarray
    action: CentroidalAction
    phase: float


@dataclass(frozen=True, eq=False)
class SimState:
    centroidal: CentroidalState
    # NaN rows for legs without a pinned anchor
    anchors: np.ndarray
    liftoff: np.ndarray
    joint_angles: np.ndarray
    joint_velocities: np.ndarray
    time: float = 0.0
    tick: int = 0
    applied_perturbations: frozenset = frozenset()
    last: TickInfo | None = None
    previous_feet: np.ndarray | None = None

    @property
    def pinned(self) -> np.ndarray:
        return ~np.isnan(self.anchors[:, 0])

    def foot_velocities(self, dt: float) -> np.ndarray:
        if self.previous_feet is None:
            return np.zeros((4, 3))
        return (self.centroidal.foot_positions - self.previous_feet) / dt


def apply_payload(model: RobotModel, payload: float) -> RobotModel:
    """Model with ``payload`` kg added to the base at the CoM."""
    if payload < 0:
        raise ValueError("payload must be non-negative")
    if payload == 0:
        return model
    return with_payload(model, payload)


def nominal_joint_angles(model: RobotModel, height: float) -> np.ndarray:
    """Joint angles placing each foot under its hip (outboard by the abduction link) at ``height`` below the base."""
    angles = np.empty((4, 3))
    for leg in range(4):
        hip = model.hip_offsets[leg]
        target = np.array([hip[0], hip[1] + SIDE_SIGN[leg] * model.abduction_length, -height])
        angles[leg] = inverse_kinematics(model, leg, target)
    return angles


def standing_state(model: RobotModel, height: float = 0.28, position_xy=(0.0, 0.0), yaw: float = 0.0, ground_height: float = 0.0) -> SimState:
    """Upright, at rest, all four feet pinned on the ground."""
    angles = nominal_joint_angles(model, height)
    rpy = np.array([0.0, 0.0, yaw])
    position = np.array([position_xy[0], position_xy[1], ground_height + height])
    base = CentroidalState(position=position, rpy=rpy)
    R = base.rotation
    feet = np.array([position + R @ forward_kinematics(model, leg, angles[leg]) for leg in range(4)])
    feet[:, 2] = ground_height
    centroidal = base.replace(foot_positions=feet, contacts=np.ones(4, dtype=bool))
    return SimState(
        centroidal=centroidal,
        anchors=feet.copy(),
        liftoff=feet.copy(),
        joint_angles=angles,
        joint_velocities=np.zeros((4, 3)),
    )


def _anchor_reachable(model: RobotModel, state: CentroidalState, leg: int, anchor) -> bool:
    local = state.rotation.T @ (anchor - state.position)
    try:
        inverse_kinematics(model, leg, local)
    except Unreachable:
        return False
    return True


def step_low_level(
    sim: SimState,
    cfg: SimConfig,
    model: RobotModel,
    gait: gaitmod.GaitConfig,
    phase: gaitmod.PhaseState,
    action: CentroidalAction,
    controller: ControllerConfig,
) -> SimState:
    """Advance the simulation by one control tick of ``cfg.dt``."""
    state = sim.centroidal
    ground = cfg.ground_height
    phi = phase.phase
    physical = cfg.contact_mode == "physical"
    desired = gaitmod.desired_contact_state(gait, phi)

    # (1) contact resolution
    anchors = sim.anchors.copy()
    liftoff = sim.liftoff.copy()
    feet = state.foot_positions.copy()
    late = np.zeros(4, dtype=bool)
    for leg in range(4):
        pinned = not np.isnan(anchors[leg, 0])
        if desired[leg]:
            if pinned and physical and not _anchor_reachable(model, state, leg, anchors[leg]):
                anchors[leg] = np.nan
                liftoff[leg] = feet[leg]
                pinned = False
            if not pinned:
                if not physical or feet[leg, 2] <= ground + GROUND_TOL:
                    anchors[leg] = [feet[leg, 0], feet[leg, 1], ground]
                else:
                    late[leg] = True
        elif pinned:
            liftoff[leg] = anchors[leg]
            anchors[leg] = np.nan
    stance = ~np.isnan(anchors[:, 0])
    feet[stance] = anchors[stance]
    state = state.replace(foot_positions=feet)

    # (2) controller
    commands, grf = stance_leg_command(model, state, sim.joint_angles, action, stance, controller)
    torques = np.zeros((4, 3))
    saturated = np.zeros(4, dtype=bool)
    for leg, cmd in commands.items():
        torques[leg] = cmd.torque
        saturated[leg] = cmd.saturated
    swing_targets = {}
    for leg in np.flatnonzero(~stance):
        s = 1.0 if late[leg] else None
        cmd = swing_leg_command(model, state, gait, phi, leg, action, liftoff[leg], controller, ground, s=s)
        swing_targets[int(leg)] = cmd.target_world

    # (3) dynamics and (4) semi-implicit Euler
    R = state.rotation
    acc_world = base_to_world_accel(grf.achieved_acceleration, R)
    dt = cfg.dt
    velocity = state.velocity + acc_world[3:] * dt
    omega = state.angular_velocity + acc_world[:3] * dt
    applied = set(sim.applied_perturbations)
    for i, pert in enumerate(cfg.perturbations):
        if i not in applied and sim.time + dt > pert.start:
            velocity = velocity + np.asarray(pert.delta_velocity, dtype=float)
            omega = omega + np.asarray(pert.delta_angular_velocity, dtype=float)
            applied.add(i)
    position = state.position + velocity * dt
    rpy = state.rpy + euler_rates(state.rpy, omega) * dt

    if not np.all(np.isfinite(position)) or np.linalg.norm(velocity) > MAX_BASE_SPEED or abs(rpy[1]) >= PITCH_GUARD:
        raise SimDiverged(f"base diverged at t={sim.time + dt:.3f}s (speed {np.linalg.norm(velocity):.2f} m/s, pitch {rpy[1]:.3f} rad)")

    new_base = state.replace(position=position, rpy=rpy, velocity=velocity, angular_velocity=omega)

    # (5) feet: anchors for stance, commanded targets for swing
    R_new = new_base.rotation
    new_feet = feet.copy()
    angles = sim.joint_angles.copy()
    for leg in range(4):
        world = anchors[leg] if stance[leg] else swing_targets[leg]
        local, _ = clamp_to_workspace(model, leg, R_new.T @ (world - position))
        # (6) joint state from the realised foot position
        angles[leg] = inverse_kinematics(model, leg, local)
        if not stance[leg]:
            world = position + R_new @ local
        new_feet[leg] = world

    if physical:
        contacts = stance | (~stance & (new_feet[:, 2] <= ground + GROUND_TOL))
    else:
        contacts = stance.copy()

    new_base = new_base.replace(foot_positions=new_feet, contacts=contacts)
    info = TickInfo(desired, grf, torques, saturated, action, phi)
    return SimState(
        centroidal=new_base,
        anchors=anchors,
        liftoff=liftoff,
        joint_angles=angles,
        joint_velocities=(angles - sim.joint_angles) / dt,
        time=sim.time + dt,
        tick=sim.tick + 1,
        applied_perturbations=frozenset(applied),
        last=info,
        previous_feet=state.foot_positions,
    )


def step_high_level(
    sim: SimState,
    cfg: SimConfig,
    model: RobotModel,
    gait: gaitmod.GaitConfig,
    phase: gaitmod.PhaseState,
    action: CentroidalAction,
    controller: ControllerConfig,
) -> tuple[SimState, gaitmod.PhaseState, list[SimState]]:
    """Hold ``action`` for ``cfg.steps_per_action`` ticks.

    The phase advances once per tick, after the tick's control step. Returns
    the final state, the new phase and the per-tick states (for logging).
    """
    ticks = []
    f_step = gait.clamp_frequency(action.f_step)
    for _ in range(cfg.steps_per_action):
        sim = step_low_level(sim, cfg, model, gait, phase, action, controller)
        phase = gaitmod.advance_phase(phase, f_step, cfg.dt, gait.frequency_bounds)
        ticks.append(sim)
    return sim, phase, ticks


def mechanical_energy(model: RobotModel, state: CentroidalState) -> float:
    """Translational plus rotational kinetic energy plus potential energy of the base."""
    R = state.rotation
    omega_body = R.T @ state.angular_velocity
    kinetic = 0.5 * model.total_mass * float(state.velocity @ state.velocity)
    rotational = 0.5 * float(omega_body @ model.base_inertia @ omega_body)
    return kinetic + rotational + model.total_mass * model.gravity * float(state.position[2])

