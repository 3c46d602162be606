"""Run configuration: one file holding every tunable of a rollout.

Sections: ``robot``, ``gait``, ``solver``, ``sim``, ``env``, ``ablation``,
``training`` and a top-level ``seed``. Every section is optional and falls
back to defaults. Unknown keys are rejected with their dotted path. Files may
be JSON (``.json``) or TOML (``.toml``).

The config hash is the SHA-256 of the canonical JSON of the *resolved*
config, so two files that differ only in spelled-out defaults hash equal.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .controller import GRF_MODES, ActionBounds, ControllerConfig
from .env import EnvConfig, HeuristicTuning, JumpEnv, with_ablation
from .gait import GaitConfig, preset_gait
from .grf import SolverWeights
from .model import ConfigError, RobotModel, robot_model_from_dict
from .reward import DEFAULT_SIGNS, DEFAULT_WEIGHTS, REWARD_TERMS
from .simulator import CONTACT_MODES, Perturbation, SimConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SECTIONS = ("robot", "gait", "solver", "sim", "env", "ablation", "training", "seed")
ABLATIONS = ("no_gait", "no_swing", "no_swing_ref", "qp_mode")

# PPO settings are carried for provenance only; nothing here trains a policy
DEFAULT_TRAINING = {
    "algorithm": "ppo",
    "learning_rate": 1e-3,
    "adaptive_learning_rate": True,
    "env_steps_per_update": 98304,
    "batch_size": 24576,
    "epochs_per_update": 5,
    "discount": 0.99,
    "gae_lambda": 0.95,
    "clip_range": 0.2,
    "hidden_layers": [512, 256, 128],
    "activation": "elu",
}


def _mapping(data, path: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(path, "expected a mapping")
    return data


def _check_keys(data: dict, known, path: str) -> None:
    for key in data:
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown key")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, "expected a number")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, "expected an integer")
    return value


def _boolean(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(path, "expected true or false")
    return value


def _array(value, path: str, shapes) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(path, "expected numbers") from None
    if arr.shape not in shapes:
        raise ConfigError(path, f"expected shape one of {shapes}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(path, "must be finite")
    return arr


@dataclass(frozen=True)
class Ablation:
    no_gait: bool = False
    no_swing: bool = False
    no_swing_ref: bool = False
    qp_mode: bool = False

    @property
    def active(self) -> list[str]:
        return [name for name in ABLATIONS if getattr(self, name)]


@dataclass(frozen=True, eq=False)
class RunConfig:
    robot: RobotModel = field(default_factory=RobotModel)
    gait: GaitConfig = field(default_factory=lambda: preset_gait("pronking"))
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    sim: SimConfig = field(default_factory=lambda: SimConfig(contact_mode="physical"))
    env: EnvConfig = field(default_factory=EnvConfig)
    ablation: Ablation = field(default_factory=Ablation)
    training: dict = field(default_factory=lambda: dict(DEFAULT_TRAINING))
    seed: int = 0

    def to_dict(self) -> dict:
        env = self.env
        bounds = env.action_bounds or ActionBounds.default(self.gait.frequency_bounds)
        return {
            "robot": self.robot.to_dict(),
            "gait": self.gait.to_dict(),
            "solver": {
                "mode": self.controller.mode,
                "U": self.controller.weights.U.tolist(),
                "V": self.controller.weights.V.tolist(),
                "kp": self.controller.kp.tolist(),
                "kd": self.controller.kd.tolist(),
                "swing_kp": self.controller.swing_kp,
                "swing_kd": self.controller.swing_kd,
                "no_swing": self.controller.no_swing,
                "no_swing_ref": self.controller.no_swing_ref,
            },
            "sim": {
                "dt": self.sim.dt,
                "steps_per_action": self.sim.steps_per_action,
                "ground_height": self.sim.ground_height,
                "contact_mode": self.sim.contact_mode,
                "payload_mass": self.sim.payload_mass,
                "perturbations": [
                    {
                        "start": p.start,
                        "end": p.end,
                        "delta_velocity": list(p.delta_velocity),
                        "delta_angular_velocity": list(p.delta_angular_velocity),
                    }
                    for p in self.sim.perturbations
                ],
            },
            "env": {
                "weights": dict(env.weights),
                "signs": dict(env.signs),
                "action_bounds": {"lower": bounds.lower.tolist(), "upper": bounds.upper.tolist()},
                "termination_height": env.termination_height,
                "upright_threshold": env.upright_threshold,
                "goal_range": list(env.goal_range),
                "num_cycles": env.num_cycles,
                "alive_bonus": env.alive_bonus,
                "alive_bonus_value": env.alive_bonus_value,
                "phase_encoding": env.phase_encoding,
                "absolute_pose_in_obs": env.absolute_pose_in_obs,
                "initial_height": env.initial_height,
                "no_gait": env.no_gait,
                "heuristic": asdict(env.heuristic),
            },
            "ablation": asdict(self.ablation),
            "training": dict(self.training),
            "seed": self.seed,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def effective(self) -> tuple[EnvConfig, ControllerConfig]:
        """Env and controller configs with the ablation overlay applied."""
        a = self.ablation
        return with_ablation(self.env, self.controller, a.no_gait, a.no_swing, a.no_swing_ref, a.qp_mode)

    def make_env(self) -> JumpEnv:
        env_cfg, controller = self.effective()
        return JumpEnv(self.robot, self.gait, self.sim, controller, env_cfg)

    def with_overrides(self, **changes) -> "RunConfig":
        return replace(self, **changes)


class EnvFactory:
    """Picklable zero-argument environment constructor for process pools."""

    def __init__(self, config: RunConfig):
        self.config = config

    def __call__(self) -> JumpEnv:
        return self.config.make_env()


def _parse_robot(data, solver: dict) -> RobotModel:
    data = dict(_mapping(data, "robot"))
    # friction and force bounds may also be given in the solver section
    for src, dst in (("mu", "friction_mu"), ("f_min", "f_min"), ("f_max", "f_max")):
        if src in solver:
            data[dst] = _number(solver[src], f"solver.{src}")
    return robot_model_from_dict(data, "robot")


def _parse_gait(data) -> GaitConfig:
    data = _mapping(data, "gait")
    if not data:
        return preset_gait("pronking")
    if "preset" not in data and "stance_windows" not in data:
        data = {"preset": "pronking", **data}
    elif "preset" not in data and "name" not in data:
        data = {"name": "custom", **data}
    return GaitConfig.from_dict(data, "gait")


def _parse_solver(data) -> ControllerConfig:
    data = _mapping(data, "solver")
    known = {"mode", "U", "V", "mu", "f_min", "f_max", "kp", "kd", "swing_kp", "swing_kd", "no_swing", "no_swing_ref"}
    _check_keys(data, known, "solver")
    kwargs = {}
    if "mode" in data:
        mode = data["mode"]
        if not isinstance(mode, str):
            raise ConfigError("solver.mode", "expected a string")
        mode = mode.replace("-", "_")
        if mode not in GRF_MODES:
            raise ConfigError("solver.mode", f"expected one of {GRF_MODES}")
        kwargs["mode"] = mode
    weights = {}
    if "U" in data:
        weights["U"] = _array(data["U"], "solver.U", [(6,), (6, 6)])
    if "V" in data:
        weights["V"] = _array(data["V"], "solver.V", [(), (12,), (12, 12)])
    if weights:
        kwargs["weights"] = SolverWeights(**weights)
    for key in ("kp", "kd"):
        if key in data:
            kwargs[key] = _array(data[key], f"solver.{key}", [(6,)])
    for key in ("swing_kp", "swing_kd"):
        if key in data:
            kwargs[key] = _number(data[key], f"solver.{key}")
    for key in ("no_swing", "no_swing_ref"):
        if key in data:
            kwargs[key] = _boolean(data[key], f"solver.{key}")
    return ControllerConfig(**kwargs)


def _parse_sim(data) -> SimConfig:
    data = _mapping(data, "sim")
    known = {"dt", "steps_per_action", "ground_height", "contact_mode", "payload_mass", "perturbations"}
    _check_keys(data, known, "sim")
    kwargs = {"contact_mode": "physical"}
    for key in ("dt", "ground_height", "payload_mass"):
        if key in data:
            kwargs[key] = _number(data[key], f"sim.{key}")
    if "steps_per_action" in data:
        kwargs["steps_per_action"] = _integer(data["steps_per_action"], "sim.steps_per_action")
    if "contact_mode" in data:
        if data["contact_mode"] not in CONTACT_MODES:
            raise ConfigError("sim.contact_mode", f"expected one of {CONTACT_MODES}")
        kwargs["contact_mode"] = data["contact_mode"]
    if "perturbations" in data:
        perts = data["perturbations"]
        if not isinstance(perts, list):
            raise ConfigError("sim.perturbations", "expected a list")
        parsed = []
        for i, item in enumerate(perts):
            path = f"sim.perturbations[{i}]"
            item = _mapping(item, path)
            _check_keys(item, {"start", "end", "delta_velocity", "delta_angular_velocity"}, path)
            p = {}
            for key in ("start", "end"):
                if key not in item:
                    raise ConfigError(f"{path}.{key}", "required")
                p[key] = _number(item[key], f"{path}.{key}")
            for key in ("delta_velocity", "delta_angular_velocity"):
                if key in item:
                    p[key] = tuple(_array(item[key], f"{path}.{key}", [(3,)]).tolist())
            parsed.append(Perturbation(**p))
        kwargs["perturbations"] = tuple(parsed)
    return SimConfig(**kwargs)


def _parse_term_table(data, path: str, defaults: dict) -> dict:
    data = _mapping(data, path)
    _check_keys(data, REWARD_TERMS, path)
    table = dict(defaults)
    for key, value in data.items():
        table[key] = _number(value, f"{path}.{key}")
    return table


def _parse_env(data, gait: GaitConfig) -> EnvConfig:
    data = _mapping(data, "env")
    known = {
        "weights", "signs", "action_bounds", "termination_height", "upright_threshold", "goal_range",
        "num_cycles", "alive_bonus", "alive_bonus_value", "phase_encoding", "absolute_pose_in_obs",
        "initial_height", "no_gait", "heuristic",
    }
    _check_keys(data, known, "env")
    kwargs = {}
    if "weights" in data:
        kwargs["weights"] = _parse_term_table(data["weights"], "env.weights", DEFAULT_WEIGHTS)
    if "signs" in data:
        kwargs["signs"] = _parse_term_table(data["signs"], "env.signs", DEFAULT_SIGNS)
    if "action_bounds" in data:
        ab = _mapping(data["action_bounds"], "env.action_bounds")
        _check_keys(ab, {"lower", "upper"}, "env.action_bounds")
        default = ActionBounds.default(gait.frequency_bounds)
        lower = _array(ab["lower"], "env.action_bounds.lower", [(16,)]) if "lower" in ab else default.lower
        upper = _array(ab["upper"], "env.action_bounds.upper", [(16,)]) if "upper" in ab else default.upper
        kwargs["action_bounds"] = ActionBounds(lower, upper)
    for key in ("termination_height", "upright_threshold", "alive_bonus_value", "initial_height"):
        if key in data:
            kwargs[key] = _number(data[key], f"env.{key}")
    if "goal_range" in data:
        kwargs["goal_range"] = tuple(_array(data["goal_range"], "env.goal_range", [(2,)]).tolist())
    if "num_cycles" in data:
        kwargs["num_cycles"] = _integer(data["num_cycles"], "env.num_cycles")
    for key in ("alive_bonus", "absolute_pose_in_obs", "no_gait"):
        if key in data:
            kwargs[key] = _boolean(data[key], f"env.{key}")
    if "phase_encoding" in data:
        kwargs["phase_encoding"] = data["phase_encoding"]
    if "heuristic" in data:
        h = _mapping(data["heuristic"], "env.heuristic")
        _check_keys(h, HeuristicTuning.__dataclass_fields__, "env.heuristic")
        kwargs["heuristic"] = HeuristicTuning(**{k: _number(v, f"env.heuristic.{k}") for k, v in h.items()})
    return EnvConfig(**kwargs)


def _parse_ablation(data) -> Ablation:
    data = _mapping(data, "ablation")
    _check_keys(data, ABLATIONS, "ablation")
    return Ablation(**{k: _boolean(v, f"ablation.{k}") for k, v in data.items()})


def _parse_training(data) -> dict:
    data = _mapping(data, "training")
    _check_keys(data, DEFAULT_TRAINING, "training")
    out = dict(DEFAULT_TRAINING)
    out.update(data)
    return out


def _section(name: str, parse, *args):
    try:
        return parse(*args)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, str(exc)) from None


def config_from_dict(data) -> RunConfig:
    """Validate and resolve a raw config mapping. Raises ``ConfigError``."""
    data = _mapping(data, "config")
    _check_keys(data, SECTIONS, "config")
    solver_raw = _mapping(data.get("solver", {}), "solver")
    gait = _section("gait", _parse_gait, data.get("gait", {}))
    return RunConfig(
        robot=_section("robot", _parse_robot, data.get("robot", {}), solver_raw),
        gait=gait,
        controller=_section("solver", _parse_solver, solver_raw),
        sim=_section("sim", _parse_sim, data.get("sim", {})),
        env=_section("env", _parse_env, data.get("env", {}), gait),
        ablation=_section("ablation", _parse_ablation, data.get("ablation", {})),
        training=_section("training", _parse_training, data.get("training", {})),
        seed=_integer(data.get("seed", 0), "seed"),
    )


def load_config(path) -> RunConfig:
    """Load a JSON or TOML run config; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read ({exc.strerror})") from None
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(str(path), f"parse error: {exc}") from None
    return config_from_dict(data)
