"""Centroidal rigid-body dynamics of the base under massless legs.

Accelerations are ordered ``[omega_dot; p_ddot]`` in every dynamics routine,
both expressed in the base frame. The PD controller works on world-frame
quantities in ``[p, Theta]`` order; :func:`world_to_base_accel` and
:func:`base_to_world_accel` are the adapters between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import RobotModel

PITCH_GUARD = math.pi / 2 - 0.17


def skew(v) -> np.ndarray:
    x, y, z = (float(a) for a in v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rot_z(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_rpy(rpy) -> np.ndarray:
    """Body-to-world rotation ``Rz(yaw) @ Ry(pitch) @ Rx(roll)`` (Z-Y-X Euler)."""
    roll, pitch, yaw = (float(a) for a in rpy)
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def euler_rate_matrix(rpy) -> np.ndarray:
    """Matrix ``E`` with ``omega_world = E @ (roll_dot, pitch_dot, yaw_dot)``."""
    _, pitch, yaw = (float(a) for a in rpy)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([[cy * cp, -sy, 0.0], [sy * cp, cy, 0.0], [-sp, 0.0, 1.0]])


def euler_rates(rpy, omega_world) -> np.ndarray:
    return np.linalg.solve(euler_rate_matrix(rpy), np.asarray(omega_world, dtype=float))


@dataclass(frozen=True, eq=False)
class CentroidalState:
    """Base pose/velocity plus per-foot world positions and contact flags.

    ``velocity`` and ``angular_velocity`` are expressed in the world frame.
    """

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rpy: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    foot_positions: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))
    contacts: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=bool))

    def __post_init__(self):
        for name, shape, dtype in (
            ("position", (3,), float),
            ("rpy", (3,), float),
            ("velocity", (3,), float),
            ("angular_velocity", (3,), float),
            ("foot_positions", (4, 3), float),
            ("contacts", (4,), bool),
        ):
            arr = np.array(getattr(self, name), dtype=dtype).reshape(shape)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def rotation(self) -> np.ndarray:
        return rotation_from_rpy(self.rpy)

    @property
    def pose(self) -> np.ndarray:
        """World pose in ``[p, Theta]`` order."""
        return np.concatenate([self.position, self.rpy])

    @property
    def twist(self) -> np.ndarray:
        """World velocity in ``[v, omega]`` order."""
        return np.concatenate([self.velocity, self.angular_velocity])

    def feet_in_base(self) -> np.ndarray:
        """Foot positions relative to the base origin, base frame (4x3)."""
        return (self.foot_positions - self.position) @ self.rotation

    def replace(self, **changes) -> "CentroidalState":
        return replace(self, **changes)


def gravity_in_base(model: RobotModel, rpy) -> np.ndarray:
    return rotation_from_rpy(rpy).T @ np.array([0.0, 0.0, -model.gravity])


def build_centroidal_dynamics(model: RobotModel, state: CentroidalState, stance_mask) -> tuple[np.ndarray, np.ndarray]:
    """Linear time-varying map ``qdd = A f + g`` for the stance legs.

    Returns ``A`` of shape ``(6, 3k)`` with one column block per stance leg (in
    leg order) and ``g`` of shape ``(6,)``. Foot lever arms are taken in the
    base frame.
    """
    stance = np.flatnonzero(np.asarray(stance_mask, dtype=bool))
    feet = state.feet_in_base()
    return centroidal_matrix(model, feet[stance]), np.concatenate([np.zeros(3), gravity_in_base(model, state.rpy)])


def centroidal_matrix(model: RobotModel, lever_arms) -> np.ndarray:
    """``A`` for the given (k, 3) base-frame lever arms."""
    lever_arms = np.asarray(lever_arms, dtype=float).reshape(-1, 3)
    k = lever_arms.shape[0]
    inv_inertia = model.inertia_inv
    A = np.zeros((6, 3 * k))
    for j, r in enumerate(lever_arms):
        A[:3, 3 * j : 3 * j + 3] = inv_inertia @ skew(r)
        A[3:, 3 * j : 3 * j + 3] = np.eye(3) / model.total_mass
    return A


def world_to_base_accel(accel_world, rotation) -> np.ndarray:
    """Rotate a ``[omega_dot; p_ddot]`` vector from world to base frame."""
    a = np.asarray(accel_world, dtype=float)
    return np.concatenate([rotation.T @ a[:3], rotation.T @ a[3:]])


def base_to_world_accel(accel_base, rotation) -> np.ndarray:
    a = np.asarray(accel_base, dtype=float)
    return np.concatenate([rotation @ a[:3], rotation @ a[3:]])


def pose_order_to_dynamics_order(vec6) -> np.ndarray:
    """``[linear; angular]`` to ``[angular; linear]``."""
    v = np.asarray(vec6, dtype=float)
    return np.concatenate([v[3:], v[:3]])
