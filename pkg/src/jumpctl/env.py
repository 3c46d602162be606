"""Jumping MDP on top of the centroidal simulator.

One environment step holds a policy action for ``steps_per_action`` control
ticks. Episodes last a fixed number of gait cycles; a new landing goal is
drawn at every cycle boundary.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import gait as gaitmod
from .controller import NO_GAIT_FREQUENCY, ActionBounds, CentroidalAction, ControllerConfig
from .dynamics import rot_z
from .gait import GaitConfig, PhaseState
from .model import ConfigError, RobotModel
from .reward import DEFAULT_SIGNS, DEFAULT_WEIGHTS, REWARD_TERMS, CycleAccumulator, RewardBreakdown, RewardInputs, compute_reward
from .simulator import SimConfig, SimDiverged, SimState, apply_payload, standing_state, step_high_level

KNEE_LIMIT_MARGIN = 0.05
KNEE_CONTACT_HEIGHT = 0.02


class SteppedAfterDone(RuntimeError):
    pass


class ReplayExhausted(IndexError):
    pass


@dataclass(frozen=True)
class HeuristicTuning:
    """Scripted pronk: vertical velocity ramp in stance, swing-foot clearance in flight."""

    takeoff_velocity: float = 1.1
    velocity_lead: float = 0.6
    nominal_height: float = 0.28
    height_gain: float = 2.0
    pitch_gain: float = 3.0
    max_forward_speed: float = 1.6
    min_forward_speed: float = -0.5
    # forward target stays within this band around the current forward speed
    speed_band: float = 0.3
    clearance: float = 0.08


@dataclass(frozen=True, eq=False)
class EnvConfig:
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    signs: dict = field(default_factory=lambda: dict(DEFAULT_SIGNS))
    action_bounds: ActionBounds | None = None
    termination_height: float = 0.15
    upright_threshold: float = 0.5
    goal_range: tuple = (0.3, 1.0)
    num_cycles: int = 10
    alive_bonus: bool = False
    alive_bonus_value: float = 0.02
    phase_encoding: str = "sincos"
    absolute_pose_in_obs: bool = True
    initial_height: float = 0.28
    no_gait: bool = False
    heuristic: HeuristicTuning = field(default_factory=HeuristicTuning)

    def __post_init__(self):
        for name in ("weights", "signs"):
            table = getattr(self, name)
            missing = set(REWARD_TERMS) - set(table)
            extra = set(table) - set(REWARD_TERMS)
            if missing or extra:
                raise ConfigError(f"env.{name}", f"missing {sorted(missing)} / unknown {sorted(extra)}")
        if self.phase_encoding not in ("sincos", "raw"):
            raise ConfigError("env.phase_encoding", "expected 'sincos' or 'raw'")
        lo, hi = self.goal_range
        if not 0 <= lo <= hi:
            raise ConfigError("env.goal_range", "require 0 <= low <= high")
        if self.num_cycles < 1:
            raise ConfigError("env.num_cycles", "must be >= 1")


@dataclass(frozen=True, eq=False)
class Observation:
    base_position: np.ndarray
    base_rpy: np.ndarray
    # both velocities in the heading (yaw-aligned) frame
    base_velocity: np.ndarray
    base_angular_velocity: np.ndarray
    feet_base: np.ndarray  # (4, 3), base frame
    phase: float
    goal_ego: np.ndarray  # (2,), heading frame, relative to the base

    def phase_features(self, encoding: str = "sincos") -> np.ndarray:
        if encoding == "raw":
            return np.array([self.phase])
        return np.array([math.sin(self.phase), math.cos(self.phase)])

    def to_vector(self, encoding: str = "sincos", include_absolute: bool = True) -> np.ndarray:
        parts = []
        if include_absolute:
            parts += [self.base_position, self.base_rpy]
        else:
            parts += [self.base_rpy[:2]]
        parts += [self.base_velocity, self.base_angular_velocity, self.feet_base.ravel(), self.phase_features(encoding), self.goal_ego]
        return np.concatenate(parts)


def build_observation(sim: SimState, phase: float, goal) -> Observation:
    state = sim.centroidal
    yaw = float(state.rpy[2])
    to_heading = rot_z(yaw).T
    goal_ego = (to_heading @ np.array([goal[0] - state.position[0], goal[1] - state.position[1], 0.0]))[:2]
    return Observation(
        base_position=state.position.copy(),
        base_rpy=state.rpy.copy(),
        base_velocity=to_heading @ state.velocity,
        base_angular_velocity=to_heading @ state.angular_velocity,
        feet_base=state.feet_in_base(),
        phase=float(phase),
        goal_ego=goal_ego,
    )


@dataclass
class EpisodeState:
    goal: np.ndarray
    cycles_completed: int = 0
    done: bool = False
    reason: str | None = None
    total_return: float = 0.0
    steps: int = 0
    accumulator: CycleAccumulator = field(default_factory=CycleAccumulator)
    term_sums: dict = field(default_factory=lambda: {name: 0.0 for name in REWARD_TERMS})
    cycle_flight: list = field(default_factory=list)
    flight_this_cycle: bool = False


def knee_contacts(model: RobotModel, sim: SimState, ground: float = 0.0) -> np.ndarray:
    """Proxy for knee-ground contact: knee within a margin of its fold limit
    while the foot is near the ground."""
    lo, hi = model.joint_limits[2]
    fold = lo if model.knee_backward else hi
    near_fold = np.abs(sim.joint_angles[:, 2] - fold) < KNEE_LIMIT_MARGIN
    low_foot = sim.centroidal.foot_positions[:, 2] - ground < KNEE_CONTACT_HEIGHT
    return near_fold & low_foot


class JumpEnv:
    """Single jumping environment. Not thread-safe; one instance per rollout."""

    def __init__(
        self,
        model: RobotModel | None = None,
        gait: GaitConfig | None = None,
        sim_config: SimConfig | None = None,
        controller: ControllerConfig | None = None,
        config: EnvConfig | None = None,
    ):
        self.sim_config = sim_config or SimConfig(contact_mode="physical")
        base_model = model or RobotModel()
        self.model = apply_payload(base_model, self.sim_config.payload_mass)
        self.gait = gait or gaitmod.preset_gait("pronking")
        self.controller = controller or ControllerConfig()
        self.config = config or EnvConfig()
        self.bounds = self.config.action_bounds or ActionBounds.default(self.gait.frequency_bounds)
        self.dt_high = self.sim_config.dt * self.sim_config.steps_per_action
        self.sim: SimState | None = None
        self.phase: PhaseState | None = None
        self.episode: EpisodeState | None = None
        self.rng: np.random.Generator | None = None
        self.start_xy = np.zeros(2)

    def _sample_goal(self) -> np.ndarray:
        state = self.sim.centroidal
        distance = self.rng.uniform(*self.config.goal_range)
        heading = rot_z(float(state.rpy[2]))[:2, 0]
        return state.position[:2] + distance * heading

    def observe(self) -> Observation:
        return build_observation(self.sim, self.phase.phase, self.episode.goal)

    def reset(self, seed=None) -> tuple[SimState, EpisodeState, Observation]:
        self.rng = np.random.default_rng(seed)
        self.sim = standing_state(self.model, height=self.config.initial_height, ground_height=self.sim_config.ground_height)
        self.phase = PhaseState(0.0, self.gait.default_frequency)
        self.start_xy = self.sim.centroidal.position[:2].copy()
        self.episode = EpisodeState(goal=np.zeros(2))
        self.episode.goal = self._sample_goal()
        return self.sim, self.episode, self.observe()

    def decode_action(self, raw) -> tuple[CentroidalAction, float]:
        clamped, excess = self.bounds.clamp(raw)
        if self.config.no_gait:
            clamped[0] = NO_GAIT_FREQUENCY
        if self.controller.no_swing:
            clamped[4:] = 0.0
        return CentroidalAction.from_vector(clamped), excess

    def step(self, raw_action) -> tuple[Observation, RewardBreakdown, bool, dict]:
        if self.episode is None:
            raise RuntimeError("call reset() before step()")
        if self.episode.done:
            raise SteppedAfterDone("episode already finished; call reset()")
        action, excess = self.decode_action(raw_action)
        ep = self.episode
        before = self.phase
        sim, phase, ticks = step_high_level(self.sim, self.sim_config, self.model, self.gait, before, action, self.controller)
        self.sim, self.phase = sim, phase

        state = sim.centroidal
        ground = self.sim_config.ground_height
        desired = gaitmod.desired_contact_state(self.gait, phase.phase)
        inputs = RewardInputs(
            rotation=state.rotation,
            base_position=state.position,
            contacts=state.contacts,
            desired_contacts=desired,
            foot_velocities=sim.foot_velocities(self.sim_config.dt),
            foot_heights=state.foot_positions[:, 2] - ground,
            knee_contacts=knee_contacts(self.model, sim, ground),
            f_step=self.gait.clamp_frequency(action.f_step),
            goal=ep.goal,
            action_excess=excess,
        )
        turns = phase.turns - before.turns
        bonus = self.config.alive_bonus_value if self.config.alive_bonus else 0.0
        reward = compute_reward(inputs, turns, self.config.weights, self.config.signs, bonus)

        ep.steps += 1
        ep.total_return += reward.total
        for name in REWARD_TERMS:
            ep.term_sums[name] += reward.terms[name]
        if any(not t.centroidal.contacts.any() for t in ticks):
            ep.flight_this_cycle = True

        boundaries = list(range(before.cycle_count + 1, phase.cycle_count + 1))
        ep.accumulator.add(reward.rate, before.turns, phase.turns, boundaries)
        for _ in boundaries:
            ep.cycles_completed += 1
            ep.cycle_flight.append(ep.flight_this_cycle)
            ep.flight_this_cycle = False
            ep.goal = self._sample_goal()

        # termination is checked after the reward for this step
        if state.position[2] - ground < self.config.termination_height:
            ep.done, ep.reason = True, "height"
        elif state.rotation[2, 2] < self.config.upright_threshold:
            ep.done, ep.reason = True, "orientation"
        elif ep.cycles_completed >= self.config.num_cycles:
            ep.done, ep.reason = True, "cycles_complete"

        info = {
            "action": action,
            "action_excess": excess,
            "ticks": ticks,
            "cycle_boundary": bool(boundaries),
            "reason": ep.reason,
        }
        return self.observe(), reward, ep.done, info


class HeuristicPolicy:
    """Scripted stand-in for a learned centroidal policy.

    Stance: vertical velocity target ramps up toward lift-off; forward velocity
    is chosen to cover the remaining goal distance by the end of the cycle.
    Flight: zero velocity targets, swing residuals lift the feet.
    """

    def __init__(self, gait: GaitConfig, tuning: HeuristicTuning | None = None, f_step: float | None = None):
        self.gait = gait
        self.tuning = tuning or HeuristicTuning()
        self.f_step = gait.default_frequency if f_step is None else f_step

    def _stance_progress(self, phi: float) -> float | None:
        """Progress through the stance window shared by the most legs, or None in flight."""
        best = None
        for leg in range(4):
            for start, length in gaitmod.stance_intervals(self.gait, leg):
                offset = (phi - start) % gaitmod.TWO_PI
                if offset < length:
                    best = offset / length if best is None else max(best, offset / length)
        return best

    def action(self, obs: Observation) -> CentroidalAction:
        tune = self.tuning
        phi = obs.phase % gaitmod.TWO_PI
        residuals = np.zeros((4, 3))
        for leg in range(4):
            try:
                s = gaitmod.swing_progress(self.gait, phi, leg)
            except gaitmod.NotInSwing:
                continue
            residuals[leg, 2] = tune.clearance * 4.0 * s * (1.0 - s)

        s_stance = self._stance_progress(phi)
        if s_stance is None:
            return CentroidalAction(f_step=self.f_step, residuals=residuals)

        remaining = (gaitmod.TWO_PI - phi) / gaitmod.TWO_PI / self.f_step
        v_x = float(np.clip(obs.goal_ego[0] / max(remaining, 1e-3), tune.min_forward_speed, tune.max_forward_speed))
        v_now = float(obs.base_velocity[0])
        v_x = float(np.clip(v_x, v_now - tune.speed_band, v_now + tune.speed_band))
        v_z = tune.takeoff_velocity * s_stance + tune.velocity_lead + tune.height_gain * (tune.nominal_height - obs.base_position[2])
        w_y = -tune.pitch_gain * float(obs.base_rpy[1])
        return CentroidalAction(f_step=self.f_step, v_x=v_x, v_z=v_z, w_y=w_y, residuals=residuals)

    def __call__(self, obs: Observation) -> np.ndarray:
        return self.action(obs).to_vector()


class ReplayPolicy:
    """Replays a fixed sequence of raw action vectors."""

    def __init__(self, actions):
        self.actions = [np.asarray(a, dtype=float) for a in actions]
        self.index = 0

    def __call__(self, obs: Observation) -> np.ndarray:
        if self.index >= len(self.actions):
            raise ReplayExhausted("replay log exhausted before the episode ended")
        action = self.actions[self.index]
        self.index += 1
        return action


@dataclass
class EpisodeResult:
    seed: int
    total_return: float
    displacement: float
    reason: str
    cycles: int
    steps: int
    term_means: dict
    cycle_flight: list
    wall_time: float
    rows: list | None = None


def run_episode(env: JumpEnv, policy, seed, record: bool = False, max_steps: int = 100_000) -> EpisodeResult:
    """Roll one episode to completion. Divergence ends it with reason ``diverged``."""
    from .logs import tick_row

    t0 = time.perf_counter()
    _, episode, obs = env.reset(seed)
    rows = [] if record else None
    reason = None
    while not episode.done and episode.steps < max_steps:
        try:
            obs, _, _, info = env.step(policy(obs))
        except SimDiverged:
            reason = "diverged"
            break
        except ReplayExhausted:
            reason = "replay_exhausted"
            break
        if record:
            for tick in info["ticks"]:
                rows.append(tick_row(tick))
    reason = reason or episode.reason or "max_steps"
    start = env.start_xy
    heading = np.array([1.0, 0.0])
    disp = float((env.sim.centroidal.position[:2] - start) @ heading)
    means = {k: v / max(episode.steps, 1) for k, v in episode.term_sums.items()}
    return EpisodeResult(
        seed=int(seed),
        total_return=episode.total_return,
        displacement=disp,
        reason=reason,
        cycles=episode.cycles_completed,
        steps=episode.steps,
        term_means=means,
        cycle_flight=list(episode.cycle_flight),
        wall_time=time.perf_counter() - t0,
        rows=rows,
    )


def episode_seeds(seed: int, n: int) -> list[int]:
    """Per-episode seeds; episode ``i`` gets the same seed whatever ``n`` is."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1)[0]) for c in children]


def heuristic_factory(env: JumpEnv):
    return HeuristicPolicy(env.gait, env.config.heuristic)


def _run_one(args):
    env_factory, policy_factory, seed, record = args
    env = env_factory()
    return run_episode(env, policy_factory(env), seed, record=record)


@dataclass
class BatchResult:
    episodes: list
    info: dict


def batch_rollout(n_envs: int, env_factory, policy_factory=heuristic_factory, seed: int = 0, n_jobs: int = 1, record: bool = False) -> BatchResult:
    """Run ``n_envs`` independent episodes, optionally across processes.

    Factories must be picklable when ``n_jobs > 1``. Results depend only on
    ``seed`` and the episode index, not on ``n_jobs``.
    """
    if n_envs < 1:
        raise ValueError("n_envs must be >= 1")
    seeds = episode_seeds(seed, n_envs)
    jobs = [(env_factory, policy_factory, s, record) for s in seeds]
    t0 = time.perf_counter()
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            episodes = list(pool.map(_run_one, jobs))
    else:
        episodes = [_run_one(job) for job in jobs]
    wall = time.perf_counter() - t0
    return BatchResult(episodes, {"wall_clock": wall, "n_jobs": n_jobs, "episodes_per_second": n_envs / wall if wall > 0 else float("inf")})


def with_ablation(env_config: EnvConfig, controller: ControllerConfig, no_gait=False, no_swing=False, no_swing_ref=False, qp=False):
    env_config = replace(env_config, no_gait=no_gait or env_config.no_gait)
    controller = replace(
        controller,
        no_swing=no_swing or controller.no_swing,
        no_swing_ref=no_swing_ref or controller.no_swing_ref,
        mode="qp" if qp else controller.mode,
    )
    return env_config, controller
