"""Static robot parameters.

Every controller and simulator routine reads a :class:`RobotModel`. Defaults
describe a Go1-sized quadruped; all fields can be overridden from a config
mapping (see :func:`robot_model_from_dict`).

Leg order is FR, FL, RR, RL (front-right first). Legs 0 and 1 form the front
pair, legs 2 and 3 the rear pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

GRAVITY = 9.81

LEG_NAMES = ("FR", "FL", "RR", "RL")
FRONT_LEGS = (0, 1)
REAR_LEGS = (2, 3)
# +1 for left legs, -1 for right legs
SIDE_SIGN = np.array([-1.0, 1.0, -1.0, 1.0])


class ConfigError(ValueError):
    """Raised for invalid configuration values; ``path`` names the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _default_hip_offsets() -> np.ndarray:
    x, y = 0.1881, 0.04675
    return np.array([[x, -y, 0.0], [x, y, 0.0], [-x, -y, 0.0], [-x, y, 0.0]])


def _default_joint_limits() -> np.ndarray:
    # (lower, upper) per joint: abduction, hip, knee
    return np.array([[-0.863, 0.863], [-0.686, 4.501], [-2.818, -0.888]])


@dataclass(frozen=True, eq=False)
class RobotModel:
    """Rigid-body base with four massless three-joint legs.

    Units are SI throughout. ``payload_mass`` is added to the base mass at the
    CoM and leaves the inertia untouched.
    """

    mass: float = 12.0
    base_inertia: np.ndarray = field(default_factory=lambda: np.diag([0.17, 0.33, 0.18]))
    hip_offsets: np.ndarray = field(default_factory=_default_hip_offsets)
    abduction_length: float = 0.08
    thigh_length: float = 0.213
    calf_length: float = 0.213
    friction_mu: float = 0.6
    f_min: float = 0.0
    f_max: float = 120.0
    torque_limit: float = 23.7
    payload_mass: float = 0.0
    knee_backward: bool = True
    joint_limits: np.ndarray = field(default_factory=_default_joint_limits)
    gravity: float = GRAVITY

    def __post_init__(self):
        inertia = np.array(self.base_inertia, dtype=float).reshape(3, 3)
        hips = np.array(self.hip_offsets, dtype=float).reshape(4, 3)
        limits = np.array(self.joint_limits, dtype=float).reshape(3, 2)
        for arr in (inertia, hips, limits):
            arr.setflags(write=False)
        object.__setattr__(self, "base_inertia", inertia)
        object.__setattr__(self, "hip_offsets", hips)
        object.__setattr__(self, "joint_limits", limits)
        self.validate()

    def validate(self) -> None:
        if not self.mass > 0:
            raise ConfigError("robot.mass", "must be positive")
        if self.payload_mass < 0:
            raise ConfigError("robot.payload_mass", "must be non-negative")
        if not np.allclose(self.base_inertia, self.base_inertia.T):
            raise ConfigError("robot.base_inertia", "must be symmetric")
        if np.any(np.linalg.eigvalsh(self.base_inertia) <= 0):
            raise ConfigError("robot.base_inertia", "must be positive definite")
        if self.friction_mu < 0:
            raise ConfigError("robot.friction_mu", "must be non-negative")
        if not 0 <= self.f_min < self.f_max:
            raise ConfigError("robot.f_min", "require 0 <= f_min < f_max")
        if self.thigh_length <= 0 or self.calf_length <= 0:
            raise ConfigError("robot.thigh_length", "link lengths must be positive")
        if self.abduction_length < 0:
            raise ConfigError("robot.abduction_length", "must be non-negative")
        if self.torque_limit <= 0:
            raise ConfigError("robot.torque_limit", "must be positive")

    @property
    def total_mass(self) -> float:
        return self.mass + self.payload_mass

    @property
    def inertia_inv(self) -> np.ndarray:
        return np.linalg.inv(self.base_inertia)

    @property
    def leg_reach(self) -> float:
        return self.thigh_length + self.calf_length

    def is_symmetric(self, atol: float = 1e-12) -> bool:
        """Left/right and front/rear mirror symmetry of the hip layout."""
        h = self.hip_offsets
        lr = np.allclose(h[0] * [1, -1, 1], h[1], atol=atol) and np.allclose(h[2] * [1, -1, 1], h[3], atol=atol)
        fr = np.allclose(h[0] * [-1, 1, 1], h[2], atol=atol) and np.allclose(h[1] * [-1, 1, 1], h[3], atol=atol)
        return lr and fr

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


ROBOT_FIELD_UNITS = {
    "mass": "kg",
    "base_inertia": "kg m^2, 3x3 body frame (or 3 diagonal entries)",
    "hip_offsets": "m, 4x3 hip positions in base frame (FR, FL, RR, RL)",
    "abduction_length": "m",
    "thigh_length": "m",
    "calf_length": "m",
    "friction_mu": "-",
    "f_min": "N",
    "f_max": "N",
    "torque_limit": "N m",
    "payload_mass": "kg",
    "knee_backward": "bool",
    "joint_limits": "rad, 3x2 (abduction, hip, knee) lower/upper",
    "gravity": "m/s^2",
}


def robot_model_from_dict(data: dict, path: str = "robot") -> RobotModel:
    """Build a model from a config mapping; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError(path, "expected a mapping")
    known = {f.name for f in fields(RobotModel)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown key")
    kwargs = dict(data)
    if "base_inertia" in kwargs:
        inertia = np.asarray(kwargs["base_inertia"], dtype=float)
        if inertia.shape == (3,):
            inertia = np.diag(inertia)
        if inertia.shape != (3, 3):
            raise ConfigError(f"{path}.base_inertia", "expected 3 or 3x3 values")
        kwargs["base_inertia"] = inertia
    for key, shape in (("hip_offsets", (4, 3)), ("joint_limits", (3, 2))):
        if key in kwargs:
            arr = np.asarray(kwargs[key], dtype=float)
            if arr.shape != shape:
                raise ConfigError(f"{path}.{key}", f"expected shape {shape}")
            kwargs[key] = arr
    for key in known - {"base_inertia", "hip_offsets", "joint_limits", "knee_backward"}:
        if key not in kwargs:
            continue
        value = kwargs[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}.{key}", "expected a number")
    if "knee_backward" in kwargs and not isinstance(kwargs["knee_backward"], bool):
        raise ConfigError(f"{path}.knee_backward", "expected a boolean")
    return RobotModel(**kwargs)


def with_payload(model: RobotModel, payload: float) -> RobotModel:
    return replace(model, payload_mass=model.payload_mass + payload)
