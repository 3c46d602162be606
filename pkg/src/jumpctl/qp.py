"""Dense primal active-set solver for small strictly convex QPs.

Solves ``min 0.5 x'Hx + c'x  s.t.  G x <= h`` from a feasible starting point.
Ties (constraint to drop, blocking constraint to add) are broken by the
smallest index, which rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class QPIterationLimit(RuntimeError):
    pass


@dataclass
class QPResult:
    x: np.ndarray
    active: list
    multipliers: np.ndarray  # one per row of G, zero for inactive rows
    iterations: int

    def kkt_residual(self, H, c, G, h) -> float:
        """Max violation over stationarity, primal and dual feasibility, complementarity."""
        lam = self.multipliers
        stat = H @ self.x + c + G.T @ lam
        slack = G @ self.x - h
        return float(
            max(
                np.max(np.abs(stat), initial=0.0),
                np.max(slack, initial=0.0),
                np.max(-lam, initial=0.0),
                np.max(np.abs(lam * slack), initial=0.0),
            )
        )


def solve_active_set(H, c, G, h, x0, max_iter: int = 200, tol: float = 1e-12) -> QPResult:
    H = np.asarray(H, dtype=float)
    c = np.asarray(c, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    x = np.array(x0, dtype=float)
    n, m = x.size, G.shape[0]
    if np.any(G @ x - h > 1e-9 * (1.0 + np.abs(h))):
        raise ValueError("starting point is infeasible")

    scale = max(1.0, float(np.max(np.abs(H))))
    working: list[int] = []
    for it in range(1, max_iter + 1):
        W = G[working]
        k = len(working)
        kkt = np.zeros((n + k, n + k))
        kkt[:n, :n] = H
        kkt[:n, n:] = W.T
        kkt[n:, :n] = W
        rhs = np.concatenate([-(H @ x + c), np.zeros(k)])
        sol = np.linalg.solve(kkt, rhs)
        p, lam_w = sol[:n], sol[n:]

        # ratio test; a full step lands on the working-set minimiser, where
        # lam_w are the multipliers
        alpha, blocking = 1.0, None
        if np.max(np.abs(p), initial=0.0) > tol * (1.0 + np.max(np.abs(x))):
            Gp = G @ p
            for i in range(m):
                if i in working or Gp[i] <= tol * scale:
                    continue
                step = (h[i] - G[i] @ x) / Gp[i]
                if step < alpha:
                    alpha, blocking = max(step, 0.0), i
        x = x + alpha * p
        if blocking is not None:
            working.append(blocking)
            continue

        negative = [idx for idx, lam in zip(working, lam_w) if lam < -tol * scale]
        if not negative:
            lam = np.zeros(m)
            lam[working] = lam_w
            lam = np.maximum(lam, 0.0)
            return QPResult(x=x, active=sorted(working), multipliers=lam, iterations=it)
        working.remove(min(negative))
    raise QPIterationLimit(f"active-set solver did not converge in {max_iter} iterations")
