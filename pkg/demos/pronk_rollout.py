"""Run the scripted pronking policy for one 10-cycle episode and summarise it.

The trajectory is written to pronk_rollout.csv (one row per 500 Hz tick).
"""

import numpy as np

from jumpctl.env import HeuristicPolicy, JumpEnv, run_episode
from jumpctl.logs import TRAJECTORY_COLUMNS, write_trajectory_csv

env = JumpEnv()
result = run_episode(env, HeuristicPolicy(env.gait), seed=0, record=True)

print(f"reason {result.reason}, cycles {result.cycles}, steps {result.steps}")
print(f"displacement {result.displacement:.3f} m, return {result.total_return:.4f}, wall {result.wall_time:.2f} s")
print("flight phase per cycle:", result.cycle_flight)

rows = np.array(result.rows, dtype=float)
col = {name: i for i, name in enumerate(TRAJECTORY_COLUMNS)}
contacts = rows[:, [col[f"contact_{leg}"] for leg in ("FR", "FL", "RR", "RL")]]
airborne = contacts.sum(axis=1) == 0
print(f"base height range {rows[:, col['pz']].min():.3f} .. {rows[:, col['pz']].max():.3f} m")
print(f"fraction of ticks airborne {airborne.mean():.2f}")
print(f"peak vertical GRF per leg {rows[:, [col[f'grf_{l}_z'] for l in ('FR', 'FL', 'RR', 'RL')]].max():.1f} N")

print("\nmean reward terms per step:")
for name, value in result.term_means.items():
    print(f"  {name:22s} {value: .4f}")

write_trajectory_csv("pronk_rollout.csv", result.rows)
