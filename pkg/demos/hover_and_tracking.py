"""Stand the robot on four pinned feet and look at what the stance controller does.

1. Hover: distribute weight with no acceleration target.
2. Track a forward velocity command while the feet stay put.
3. Recover from a roll offset.
"""

import math

import numpy as np

from jumpctl.controller import CentroidalAction, ControllerConfig, solve_stance_forces
from jumpctl.gait import PhaseState, preset_gait
from jumpctl.grf import SolverWeights
from jumpctl.model import LEG_NAMES, RobotModel
from jumpctl.simulator import SimConfig, SimState, apply_payload, standing_state, step_low_level

model = RobotModel()
gait = preset_gait("pronking")
stance_phase = PhaseState.from_phase(0.5 * math.pi)  # pronking stance, all four legs down

# hover forces, with and without a 4 kg payload
weights = ControllerConfig(weights=SolverWeights.uniform(1e-6))
for payload in (0.0, 4.0):
    m = apply_payload(model, payload)
    sim = standing_state(m)
    sol = solve_stance_forces(m, sim.centroidal, np.ones(4, dtype=bool), np.zeros(6), weights)
    print(f"payload {payload:3.1f} kg  expected fz {(12 + payload) * 9.81 / 4:6.3f} N")
    for name, f in zip(LEG_NAMES, sol.forces):
        print(f"  {name}: {np.array2string(f, precision=3, suppress_small=True)}")


def hold(sim, action, seconds):
    cfg, controller = SimConfig(), ControllerConfig()
    for _ in range(int(round(seconds / cfg.dt))):
        sim = step_low_level(sim, cfg, model, gait, stance_phase, action, controller)
    return sim


# forward velocity: k_d = 10 gives a ~0.1 s time constant
sim = standing_state(model)
for t in (0.1, 0.2, 0.3, 0.5):
    out = hold(sim, CentroidalAction(v_x=0.5), t)
    print(f"t={t:.1f}s  v_x={out.centroidal.velocity[0]:.4f} m/s")

# roll recovery
start = standing_state(model)
tilted = SimState(**{**start.__dict__, "centroidal": start.centroidal.replace(rpy=[0.1, 0.0, 0.0])})
for t in (0.25, 0.5, 1.0):
    out = hold(tilted, CentroidalAction(), t)
    print(f"t={t:.2f}s  roll={out.centroidal.rpy[0]: .5f} rad")
