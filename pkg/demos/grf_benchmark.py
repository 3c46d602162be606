"""Closed-form GRF plus friction clip against the active-set QP.

Random stance problems are solved both ways. On problems where no QP
constraint is active the two answers must coincide; the timing table shows
what the clip-instead-of-optimise shortcut buys.
"""

import numpy as np

from jumpctl.bench import check_agreement, random_instances, run_benchmark
from jumpctl.grf import SolverWeights
from jumpctl.model import RobotModel

model = RobotModel()
rng = np.random.default_rng(0)

inst = random_instances(model, 2000, rng)
agree = check_agreement(inst, SolverWeights(), model)
print(f"{agree.interior} of {agree.instances} instances have an empty active set")
print(f"max |f_closed - f_qp| there: {agree.max_divergence:.2e} N")

# on the remainder a bound is active, so the clip is a projection rather than the optimum
print(f"{agree.instances - agree.interior} instances have an active bound\n")

report = run_benchmark(model, batch_sizes=(1, 16, 128, 1024), instances=1024, seed=0, repeats=5)
print(report.table())
