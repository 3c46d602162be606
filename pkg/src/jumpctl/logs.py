"""Trajectory CSV and episode-summary JSON writers.

One CSV row per control tick. Columns, in order:

* ``time`` (s, end of tick), ``phase`` (rad, phase used during the tick)
* base pose ``px py pz roll pitch yaw`` and world velocity ``vx vy vz wx wy wz``
* ``contact_{leg}`` actual contact flags (0/1)
* ``grf_{leg}_{x,y,z}`` ground reaction force on the base, base frame, N
* ``foot_{leg}_{x,y,z}`` foot world position, m
* ``tau_{leg}_{abd,hip,knee}`` stance joint torques, N m
* ``clip_normal_{leg}``, ``clip_tangential_{leg}`` GRF clip flags (0/1)
* ``f_step v_x_ref v_z_ref w_y_ref`` and ``res_{leg}_{x,y,z}`` applied action

``{leg}`` runs over FR, FL, RR, RL. Floats are written with ``repr`` so a
file reloads bit-for-bit.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import LEG_NAMES
from .simulator import SimState

SUMMARY_SCHEMA_VERSION = 1


def _leg_cols(prefix: str, suffixes) -> list[str]:
    return [f"{prefix}_{leg}_{s}" for leg in LEG_NAMES for s in suffixes]


TRAJECTORY_COLUMNS = (
    ["time", "phase", "px", "py", "pz", "roll", "pitch", "yaw", "vx", "vy", "vz", "wx", "wy", "wz"]
    + [f"contact_{leg}" for leg in LEG_NAMES]
    + _leg_cols("grf", "xyz")
    + _leg_cols("foot", "xyz")
    + _leg_cols("tau", ("abd", "hip", "knee"))
    + [f"clip_normal_{leg}" for leg in LEG_NAMES]
    + [f"clip_tangential_{leg}" for leg in LEG_NAMES]
    + ["f_step", "v_x_ref", "v_z_ref", "w_y_ref"]
    + _leg_cols("res", "xyz")
)
ACTION_COLUMNS = TRAJECTORY_COLUMNS[-16:]


def tick_row(sim: SimState) -> list:
    state = sim.centroidal
    info = sim.last
    values = [sim.time, info.phase]
    values += list(state.position) + list(state.rpy) + list(state.velocity) + list(state.angular_velocity)
    values += [int(c) for c in state.contacts]
    values += list(info.grf.forces.ravel())
    values += list(state.foot_positions.ravel())
    values += list(info.torques.ravel())
    values += [int(c) for c in info.grf.normal_clipped] + [int(c) for c in info.grf.tangential_scaled]
    values += list(info.action.to_vector())
    return [v if isinstance(v, int) else float(v) for v in values]


def write_trajectory_csv(path, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in rows:
            writer.writerow([repr(v) for v in row])


def read_trajectory_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader]
    return header, np.array(data, dtype=float).reshape(-1, len(header))


def actions_from_trajectory(path, steps_per_action: int) -> list[np.ndarray]:
    """Applied action vectors, one per policy step, from a trajectory CSV."""
    header, data = read_trajectory_csv(path)
    cols = [header.index(c) for c in ACTION_COLUMNS]
    return [data[i, cols] for i in range(0, data.shape[0], steps_per_action)]


def episode_summary(result, config_hash: str, variant: str | None = None) -> dict:
    out = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "seed": result.seed,
        "config_hash": config_hash,
        "return": result.total_return,
        "displacement": result.displacement,
        "termination_reason": result.reason,
        "cycles_completed": result.cycles,
        "steps": result.steps,
        "reward_term_means": result.term_means,
        "flight_phase_per_cycle": result.cycle_flight,
    }
    if variant is not None:
        out["variant"] = variant
    return out


def write_json(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
