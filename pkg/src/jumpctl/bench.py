"""Closed-form-plus-clip versus active-set QP timing on random stance problems.

Only the solve is timed. For the closed form that is normal equations, the
batched linear solve and the clip; for the QP it is ``solve_active_set`` on a
prebuilt ``(H, c, G, h)``, one instance at a time. The first repetition of
every measurement is a warm-up and is discarded.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import centroidal_matrix, gravity_in_base, rotation_from_rpy
from .grf import SolverWeights, clip_to_friction_cone, qp_problem, solve_grf_closed_form
from .model import SIDE_SIGN, RobotModel
from .qp import solve_active_set

BENCH_SCHEMA_VERSION = 1
DEFAULT_BATCH_SIZES = (1, 16, 128, 1024)


@dataclass(frozen=True, eq=False)
class StanceInstances:
    """``M`` problems padded to four legs; swing columns of ``A`` are zero."""

    A: np.ndarray  # (M, 6, 12)
    g: np.ndarray  # (M, 6)
    qdd: np.ndarray  # (M, 6)
    mask: np.ndarray  # (M, 4)

    def __len__(self) -> int:
        return self.A.shape[0]

    def stance_problem(self, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(A_stance, g, qdd, columns)`` for instance ``i``."""
        legs = np.flatnonzero(self.mask[i])
        cols = (3 * legs[:, None] + np.arange(3)).ravel()
        return self.A[i][:, cols], self.g[i], self.qdd[i], cols


def random_instances(model: RobotModel, m: int, rng: np.random.Generator, interior_fraction: float = 0.5) -> StanceInstances:
    """Random stance sets, foot placements, base orientations and targets.

    A fraction of the targets is built as ``A f + g`` from a force well inside
    the friction cone, so that the unconstrained optimum tends to be feasible;
    the rest are free random accelerations.
    """
    A = np.zeros((m, 6, 12))
    g = np.zeros((m, 6))
    qdd = np.zeros((m, 6))
    mask = np.zeros((m, 4), dtype=bool)
    for i in range(m):
        k = rng.integers(1, 5)
        legs = np.sort(rng.choice(4, size=k, replace=False))
        mask[i, legs] = True
        feet = model.hip_offsets[legs].copy()
        feet[:, 1] += SIDE_SIGN[legs] * model.abduction_length
        feet[:, :2] += rng.uniform(-0.06, 0.06, size=(k, 2))
        feet[:, 2] = rng.uniform(-0.33, -0.18, size=k)
        rpy = np.array([rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-np.pi, np.pi)])
        a_stance = centroidal_matrix(model, feet)
        cols = (3 * legs[:, None] + np.arange(3)).ravel()
        A[i][:, cols] = a_stance
        g[i] = np.concatenate([np.zeros(3), gravity_in_base(model, rpy)])
        if rng.random() < interior_fraction:
            fz = rng.uniform(0.15, 0.7, size=k) * model.f_max
            angle = rng.uniform(0, 2 * np.pi, size=k)
            radius = rng.uniform(0, 0.6, size=k) * model.friction_mu * fz
            f = np.column_stack([radius * np.cos(angle), radius * np.sin(angle), fz]).ravel()
            qdd[i] = a_stance @ f + g[i] + rng.normal(0, 0.05, size=6)
        else:
            R = rotation_from_rpy(rpy)
            qdd[i, :3] = rng.normal(0, 5.0, size=3)
            qdd[i, 3:] = R.T @ (rng.normal(0, 3.0, size=3) + [0, 0, rng.uniform(-5, 15)])
    return StanceInstances(A, g, qdd, mask)


def closed_form_batch(inst: StanceInstances, idx, U, V, model: RobotModel) -> np.ndarray:
    """Closed form plus clip for the instances ``idx``; returns ``(n, 4, 3)``."""
    f = solve_grf_closed_form(inst.A[idx], inst.g[idx], inst.qdd[idx], U, V)
    f = clip_to_friction_cone(f.reshape(-1, 4, 3), model.friction_mu, model.f_min, model.f_max)
    return f * inst.mask[idx][..., None]


def qp_problems(inst: StanceInstances, idx, U, V, model: RobotModel) -> list:
    out = []
    for i in idx:
        A, g, qdd, cols = inst.stance_problem(i)
        H, c, G, h = qp_problem(A, g, qdd, U, V[np.ix_(cols, cols)], model.friction_mu, model.f_min, model.f_max)
        x0 = np.tile([0.0, 0.0, 0.5 * (model.f_min + model.f_max)], len(cols) // 3)
        out.append((H, c, G, h, x0, cols))
    return out


def qp_batch(problems) -> list:
    return [solve_active_set(H, c, G, h, x0) for H, c, G, h, x0, _ in problems]


@dataclass
class AgreementResult:
    instances: int
    interior: int
    max_divergence: float
    max_relative_divergence: float


def check_agreement(inst: StanceInstances, weights: SolverWeights, model: RobotModel) -> AgreementResult:
    """Compare the two solvers where the QP has an empty active set and the
    clip leaves the closed form untouched."""
    idx = np.arange(len(inst))
    unclipped = solve_grf_closed_form(inst.A, inst.g, inst.qdd, weights.U, weights.V).reshape(-1, 4, 3)
    clipped = closed_form_batch(inst, idx, weights.U, weights.V, model)
    results = qp_batch(qp_problems(inst, idx, weights.U, weights.V, model))
    worst = worst_rel = 0.0
    interior = 0
    for i, res in enumerate(results):
        stance = inst.mask[i]
        if len(res.active) or np.any(clipped[i][stance] != unclipped[i][stance]):
            continue
        interior += 1
        f_qp = res.x
        f_cf = clipped[i][stance].ravel()
        diff = float(np.max(np.abs(f_cf - f_qp)))
        worst = max(worst, diff)
        worst_rel = max(worst_rel, diff / (1.0 + float(np.max(np.abs(f_qp)))))
    return AgreementResult(len(inst), interior, worst, worst_rel)


def _stats(samples) -> dict:
    s = np.asarray(samples, dtype=float)
    return {"mean": float(s.mean()), "median": float(np.median(s)), "p99": float(np.percentile(s, 99)), "repeats": int(s.size)}


def _time(fn, repeats: int) -> list[float]:
    out = []
    for r in range(repeats + 1):
        t0 = time.perf_counter()
        fn()
        elapsed = time.perf_counter() - t0
        if r > 0:
            out.append(elapsed)
    return out


@dataclass
class BenchReport:
    batch_sizes: list
    instances: int
    seed: int
    closed_form: dict = field(default_factory=dict)  # batch -> timing stats (s)
    qp: dict = field(default_factory=dict)
    speedup: dict = field(default_factory=dict)  # batch -> median ratio
    agreement: AgreementResult | None = None
    config_hash: str | None = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        a = self.agreement
        return {
            "schema_version": BENCH_SCHEMA_VERSION,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "instances": self.instances,
            "batch_sizes": list(self.batch_sizes),
            "timings_s": {
                "closed_form": {str(b): v for b, v in self.closed_form.items()},
                "qp": {str(b): v for b, v in self.qp.items()},
            },
            "speedup_median": {str(b): v for b, v in self.speedup.items()},
            "agreement": None if a is None else {
                "interior_instances": a.interior,
                "checked_instances": a.instances,
                "max_divergence": a.max_divergence,
                "max_relative_divergence": a.max_relative_divergence,
            },
            "wall_time_s": self.wall_time,
        }

    def deterministic_dict(self) -> dict:
        """Report contents with every timing field removed."""
        out = self.to_dict()
        for key in ("timings_s", "speedup_median", "wall_time_s"):
            out.pop(key)
        return out

    def table(self) -> str:
        lines = [f"{'batch':>6} {'closed_form_ms':>15} {'qp_ms':>12} {'speedup':>9}"]
        for b in self.batch_sizes:
            cf = self.closed_form[b]["median"] * 1e3
            qp = self.qp[b]["median"] * 1e3
            lines.append(f"{b:>6} {cf:>15.4f} {qp:>12.4f} {self.speedup[b]:>8.1f}x")
        a = self.agreement
        if a is not None:
            lines.append(f"interior instances {a.interior}/{a.instances}, max divergence {a.max_divergence:.3e}")
        return "\n".join(lines)


def run_benchmark(
    model: RobotModel | None = None,
    weights: SolverWeights | None = None,
    batch_sizes=DEFAULT_BATCH_SIZES,
    instances: int = 1024,
    seed: int = 0,
    repeats: int = 5,
    config_hash: str | None = None,
) -> BenchReport:
    """Time both solvers per batch size and check interior agreement.

    Batches larger than ``instances`` cycle through the instance set.
    """
    if instances < 100:
        raise ValueError("need at least 100 instances")
    model = model or RobotModel()
    weights = weights or SolverWeights()
    t_start = time.perf_counter()
    inst = random_instances(model, instances, np.random.default_rng(seed))
    U, V = weights.U, weights.V
    report = BenchReport(list(batch_sizes), instances, seed, config_hash=config_hash)
    for b in batch_sizes:
        idx = np.arange(b) % instances
        problems = qp_problems(inst, idx, U, V, model)
        cf_times = _time(lambda: closed_form_batch(inst, idx, U, V, model), max(repeats, 20 if b <= 128 else repeats))
        qp_times = _time(lambda: qp_batch(problems), repeats if b >= 128 else max(repeats, 20))
        report.closed_form[b] = _stats(cf_times)
        report.qp[b] = _stats(qp_times)
        report.speedup[b] = report.qp[b]["median"] / report.closed_form[b]["median"]
    report.agreement = check_agreement(inst, weights, model)
    report.wall_time = time.perf_counter() - t_start
    return report
