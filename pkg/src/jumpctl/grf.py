"""Ground-reaction-force optimisation for the stance legs.

Two routes solve the same weighted tracking problem

    min_f  |A f + g - qdd_ref|_U^2 + |f|_V^2

``solve_grf_closed_form`` drops the contact-force constraints and solves the
ridge system in closed form (followed by :func:`clip_to_friction_cone`);
``solve_grf_qp`` keeps the normal-force box and the pyramidal friction cone
and solves the QP exactly with :mod:`jumpctl.qp`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ConfigError
from .qp import QPResult, solve_active_set

# tangential scaling only kicks in beyond this relative slack, which keeps the
# clip exactly idempotent under round-off
_CONE_SLACK = 1e-12
_TANGENTIAL_EPS = 1e-9


def _default_u() -> np.ndarray:
    # [wx, wy, wz, ax, ay, az]: pitch and vertical tracking weighted up
    return np.diag([1.0, 10.0, 1.0, 1.0, 1.0, 10.0])


def _default_v() -> np.ndarray:
    return 1e-4 * np.eye(12)


@dataclass(frozen=True, eq=False)
class SolverWeights:
    """Tracking weight ``U`` (6x6) and force regulariser ``V`` (12x12, all legs)."""

    U: np.ndarray = field(default_factory=_default_u)
    V: np.ndarray = field(default_factory=_default_v)

    def __post_init__(self):
        U = np.array(self.U, dtype=float)
        V = np.array(self.V, dtype=float)
        if U.ndim == 1:
            U = np.diag(U)
        if V.ndim == 0:
            V = float(V) * np.eye(12)
        elif V.ndim == 1:
            V = np.diag(V)
        for name, mat, n in (("U", U, 6), ("V", V, 12)):
            if mat.shape != (n, n):
                raise ConfigError(f"solver.{name}", f"expected {n}x{n}")
            if not np.allclose(mat, mat.T):
                raise ConfigError(f"solver.{name}", "must be symmetric")
            try:
                np.linalg.cholesky(mat)
            except np.linalg.LinAlgError:
                raise ConfigError(f"solver.{name}", "must be positive definite") from None
            mat.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)

    def v_block(self, stance_mask) -> np.ndarray:
        idx = stance_columns(stance_mask)
        return self.V[np.ix_(idx, idx)]

    @classmethod
    def uniform(cls, v: float, U=None) -> "SolverWeights":
        return cls(U=_default_u() if U is None else U, V=v * np.eye(12))


def stance_columns(stance_mask) -> np.ndarray:
    legs = np.flatnonzero(np.asarray(stance_mask, dtype=bool))
    return (3 * legs[:, None] + np.arange(3)).ravel()


def grf_objective(A, g, qdd_ref, U, V, f) -> float:
    r = A @ f + g - qdd_ref
    return float(r @ U @ r + f @ V @ f)


def solve_grf_closed_form(A, g, qdd_ref, U, V) -> np.ndarray:
    """Unconstrained minimiser ``(A'UA + V)^-1 A'U (qdd_ref - g)``.

    ``V`` must already be restricted to the stance columns of ``A``. Leading
    batch dimensions broadcast.
    """
    A = np.asarray(A, dtype=float)
    At_U = np.swapaxes(A, -1, -2) @ U
    lhs = At_U @ A + V
    rhs = At_U @ (np.asarray(qdd_ref, dtype=float) - np.asarray(g, dtype=float))[..., None]
    return np.linalg.solve(lhs, rhs)[..., 0]


def clip_to_friction_cone(forces, mu: float, f_min: float, f_max: float) -> np.ndarray:
    """Clip the normal force to its bounds, then scale the tangential part into
    the circular cone of the clipped normal force.

    ``forces`` is ``(..., 3)`` or a flat vector of stacked 3-vectors.
    """
    f_hat = np.asarray(forces, dtype=float)
    flat = f_hat.ndim == 1
    f_hat = f_hat.reshape(-1, 3) if flat else f_hat
    out = np.empty_like(f_hat)
    fz = np.clip(f_hat[..., 2], f_min, f_max)
    tangential = f_hat[..., :2]
    norm = np.hypot(tangential[..., 0], tangential[..., 1])
    limit = mu * fz
    over = (norm > limit * (1.0 + _CONE_SLACK)) & (norm >= _TANGENTIAL_EPS)
    scale = np.ones_like(norm)
    np.divide(limit, norm, out=scale, where=over)
    out[..., :2] = tangential * scale[..., None]
    out[..., 2] = fz
    return out.ravel() if flat else out


def clip_flags(f_hat, f_clipped) -> tuple[np.ndarray, np.ndarray]:
    """Per-leg (normal clipped, tangential scaled) flags."""
    f_hat = np.asarray(f_hat, dtype=float).reshape(-1, 3)
    f_clipped = np.asarray(f_clipped, dtype=float).reshape(-1, 3)
    normal = f_hat[:, 2] != f_clipped[:, 2]
    tangential = np.any(f_hat[:, :2] != f_clipped[:, :2], axis=1)
    return normal, tangential


def friction_pyramid(k: int, mu: float, f_min: float, f_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Inequalities ``G f <= h`` for ``k`` stance legs: normal box plus pyramid."""
    rows = np.array(
        [
            [0.0, 0.0, -1.0],  # -fz <= -f_min
            [0.0, 0.0, 1.0],  # fz <= f_max
            [1.0, 0.0, -mu],
            [-1.0, 0.0, -mu],
            [0.0, 1.0, -mu],
            [0.0, -1.0, -mu],
        ]
    )
    rhs = np.array([-f_min, f_max, 0.0, 0.0, 0.0, 0.0])
    G = np.zeros((6 * k, 3 * k))
    for j in range(k):
        G[6 * j : 6 * j + 6, 3 * j : 3 * j + 3] = rows
    return G, np.tile(rhs, k)


def solve_grf_qp_full(A, g, qdd_ref, U, V, mu: float, f_min: float, f_max: float, max_iter: int = 200) -> QPResult:
    """Constrained solve over the stance columns already selected in ``A``."""
    H, c, G, h = qp_problem(A, g, qdd_ref, U, V, mu, f_min, f_max)
    x0 = np.tile([0.0, 0.0, 0.5 * (f_min + f_max)], H.shape[0] // 3)
    return solve_active_set(H, c, G, h, x0, max_iter=max_iter)


def solve_grf_qp(A, g, qdd_ref, U, V, mu: float, f_min: float, f_max: float, max_iter: int = 200) -> np.ndarray:
    """Exact minimiser under the normal-force box and pyramidal friction cone.

    Swing legs are handled by passing only the stance columns of ``A`` (their
    forces are identically zero).
    """
    return solve_grf_qp_full(A, g, qdd_ref, U, V, mu, f_min, f_max, max_iter).x


def qp_problem(A, g, qdd_ref, U, V, mu, f_min, f_max):
    """``(H, c, G, h)`` of the constrained problem, for residual checks."""
    A = np.asarray(A, dtype=float)
    H = A.T @ U @ A + V
    c = -A.T @ U @ (np.asarray(qdd_ref, dtype=float) - np.asarray(g, dtype=float))
    G, h = friction_pyramid(A.shape[1] // 3, mu, f_min, f_max)
    return H, c, G, h
