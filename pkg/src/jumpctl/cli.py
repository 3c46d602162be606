"""Command-line entry points.

Exit codes: 0 success, 2 invalid config / arguments / inputs, 3 simulation
divergence in any episode, 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bench import DEFAULT_BATCH_SIZES, run_benchmark
from .config import EnvFactory, RunConfig, load_config
from .controller import solve_stance_forces
from .env import ReplayPolicy, batch_rollout, episode_seeds, heuristic_factory
from .gait import preset_gait
from .logs import actions_from_trajectory, episode_summary, write_json, write_trajectory_csv
from .model import ConfigError
from .simulator import apply_payload, standing_state

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
VARIANTS = ("no_gait", "no_swing", "no_swing_ref", "qp")
_VARIANT_FLAGS = {"no_gait": "no_gait", "no_swing": "no_swing", "no_swing_ref": "no_swing_ref", "qp": "qp_mode"}

log = logging.getLogger("jumpctl")


class UsageError(Exception):
    """Bad input that is not a config-file problem (missing replay log, bad list)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("batch sizes must be positive")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS lets the flags appear before or after the subcommand
    common.add_argument("--config", default=argparse.SUPPRESS, help="run config (.json or .toml)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="overrides the config seed")
    common.add_argument("--log-dir", default=argparse.SUPPRESS, help="output directory (default: logs)")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="errors only")

    parser = _Parser(prog="jumpctl", description="Quadruped jumping controller harness.", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def overrides(p):
        p.add_argument("--gait", choices=("pronking", "bounding", "trotting", "fly_trotting", "pacing", "crawling", "standing"))
        p.add_argument("--grf-solver", choices=("closed-form", "qp"))
        p.add_argument("--episodes", type=int, default=1)
        p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("rollout", parents=[common], help="run episodes and write logs")
    overrides(p)
    p.add_argument("--policy", default="heuristic", help="'heuristic' or 'replay:<trajectory.csv>'")

    p = sub.add_parser("ablate", parents=[common], help="rollout with an ablation overlay")
    overrides(p)
    p.add_argument("--variant", required=True, help=f"one of {', '.join(VARIANTS)}")

    p = sub.add_parser("bench-grf", parents=[common], help="closed form vs QP timing")
    p.add_argument("--batch-sizes", type=_int_list, default=list(DEFAULT_BATCH_SIZES))
    p.add_argument("--instances", type=int, default=1024)
    p.add_argument("--repeats", type=int, default=5)

    p = sub.add_parser("payload-sweep", parents=[common], help="displacement versus payload")
    p.add_argument("--payloads", type=_float_list, default=[0.0, 2.0, 4.0])
    p.add_argument("--gait", choices=("pronking", "bounding", "trotting", "fly_trotting", "pacing", "crawling", "standing"))
    p.add_argument("--grf-solver", choices=("closed-form", "qp"))

    p = sub.add_parser("validate-config", parents=[common], help="check a config file and print its hash")
    p.add_argument("path", nargs="?", help="config file (defaults to --config)")
    return parser


def _configure_logging(quiet: bool) -> None:
    level_name = os.environ.get("CAJUN_LOG_LEVEL", "info").lower()
    if level_name not in LOG_LEVELS:
        raise UsageError(f"CAJUN_LOG_LEVEL must be one of {sorted(LOG_LEVELS)}, got {level_name!r}")
    level = logging.ERROR if quiet else LOG_LEVELS[level_name]
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False


def resolve_config(args) -> RunConfig:
    config = load_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    if getattr(args, "gait", None):
        config = replace(config, gait=preset_gait(args.gait))
    if getattr(args, "grf_solver", None):
        config = replace(config, controller=replace(config.controller, mode=args.grf_solver.replace("-", "_")))
    return config


def _log_dir(args) -> Path:
    return Path(getattr(args, "log_dir", "logs"))


def _say(args, text: str) -> None:
    if not getattr(args, "quiet", False):
        print(text)


def _policy_factory(policy: str, config: RunConfig):
    if policy == "heuristic":
        return heuristic_factory
    if policy.startswith("replay:"):
        path = Path(policy[len("replay:") :])
        if not path.is_file():
            raise UsageError(f"replay log not found: {path}")
        try:
            actions = actions_from_trajectory(path, config.sim.steps_per_action)
        except (ValueError, KeyError, StopIteration) as exc:
            raise UsageError(f"cannot read replay log {path}: {exc}") from None
        return ReplayFactory(actions)
    raise UsageError(f"unknown policy {policy!r}; expected 'heuristic' or 'replay:<file>'")


class ReplayFactory:
    def __init__(self, actions):
        self.actions = actions

    def __call__(self, env):
        return ReplayPolicy(self.actions)


def run_rollouts(config: RunConfig, log_dir: Path, episodes: int, policy: str = "heuristic", variant: str | None = None, jobs: int = 1, quiet: bool = False) -> int:
    if episodes < 1:
        raise UsageError("--episodes must be >= 1")
    factory = _policy_factory(policy, config)
    batch = batch_rollout(episodes, EnvFactory(config), factory, seed=config.seed, n_jobs=jobs, record=True)
    prefix = variant or "rollout"
    digest = config.config_hash
    diverged = False
    for i, result in enumerate(batch.episodes):
        stem = f"{prefix}_ep{i:03d}_seed{result.seed}_{digest[:12]}"
        write_trajectory_csv(log_dir / f"{stem}.csv", result.rows)
        summary = episode_summary(result, digest, variant)
        summary["run_seed"] = config.seed
        summary["episode_index"] = i
        summary["trajectory_file"] = f"{stem}.csv"
        write_json(log_dir / f"{stem}.json", summary)
        diverged |= result.reason == "diverged"
        line = f"episode {i} seed {result.seed}: return {result.total_return:.4f} displacement {result.displacement:.3f} m reason {result.reason}"
        if not quiet:
            print(line)
        log.debug("wrote %s", stem)
    log.info("episodes/s %.2f (jobs=%d)", batch.info["episodes_per_second"], jobs)
    if diverged:
        log.error("simulation diverged in at least one episode")
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_rollout(args) -> int:
    config = resolve_config(args)
    return run_rollouts(config, _log_dir(args), args.episodes, args.policy, None, args.jobs, getattr(args, "quiet", False))


def cmd_ablate(args) -> int:
    if args.variant not in VARIANTS:
        raise ConfigError("variant", f"unknown variant {args.variant!r}; expected one of {VARIANTS}")
    config = resolve_config(args)
    config = replace(config, ablation=replace(config.ablation, **{_VARIANT_FLAGS[args.variant]: True}))
    return run_rollouts(config, _log_dir(args), args.episodes, "heuristic", args.variant, args.jobs, getattr(args, "quiet", False))


def cmd_bench_grf(args) -> int:
    if args.instances < 100:
        raise UsageError("--instances must be >= 100")
    config = resolve_config(args)
    report = run_benchmark(
        config.robot,
        config.controller.weights,
        batch_sizes=args.batch_sizes,
        instances=args.instances,
        seed=config.seed,
        repeats=args.repeats,
        config_hash=config.config_hash,
    )
    path = _log_dir(args) / f"bench_grf_seed{config.seed}_{config.config_hash[:12]}.json"
    write_json(path, report.to_dict())
    _say(args, report.table())
    log.info("report written to %s", path)
    return EXIT_OK


def hover_force_per_leg(config: RunConfig, payload: float) -> float:
    """Mean vertical GRF per leg for a four-leg stand with zero acceleration target."""
    model = apply_payload(config.robot, payload)
    sim = standing_state(model, height=config.env.initial_height)
    solution = solve_stance_forces(model, sim.centroidal, np.ones(4, dtype=bool), np.zeros(6), config.controller)
    return float(solution.forces[:, 2].mean())


def cmd_payload_sweep(args) -> int:
    if any(p < 0 for p in args.payloads) or not args.payloads:
        raise UsageError("payloads must be a non-empty list of non-negative masses")
    config = resolve_config(args)
    seed = episode_seeds(config.seed, 1)[0]
    rows = []
    for payload in args.payloads:
        cfg = replace(config, sim=replace(config.sim, payload_mass=float(payload)))
        batch = batch_rollout(1, EnvFactory(cfg), heuristic_factory, seed=config.seed)
        result = batch.episodes[0]
        rows.append([payload, result.displacement, hover_force_per_leg(config, payload), result.reason])
        _say(args, f"payload {payload:g} kg: displacement {result.displacement:.3f} m, reason {result.reason}")
    path = _log_dir(args) / f"payload_sweep_seed{config.seed}_{config.config_hash[:12]}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["payload_kg", "displacement_m", "hover_fz_per_leg_N", "termination_reason", "seed", "config_hash"])
        for payload, disp, hover, reason in rows:
            writer.writerow([repr(float(payload)), repr(disp), repr(hover), reason, seed, config.config_hash])
    log.info("table written to %s", path)
    return EXIT_DIVERGED if any(r[3] == "diverged" for r in rows) else EXIT_OK


def cmd_validate_config(args) -> int:
    path = args.path or getattr(args, "config", None)
    if path is None:
        raise UsageError("no config file given")
    config = load_config(path)
    _say(args, f"ok {path} hash {config.config_hash}")
    return EXIT_OK


COMMANDS = {
    "rollout": cmd_rollout,
    "ablate": cmd_ablate,
    "bench-grf": cmd_bench_grf,
    "payload-sweep": cmd_payload_sweep,
    "validate-config": cmd_validate_config,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _configure_logging(getattr(args, "quiet", False))
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # noqa: BLE001 - last-resort guard, reported as a typed exit
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
