"""Baseline solvers: a primal active-set method and an exhaustive KKT oracle.

Both exploit the same reduction: for a working/active set A, stationarity
H U + f + G_A' lam = 0 combined with G_A U = w_A collapses to the small
symmetric system

    (G_A H^-1 G_A') lam = -(w_A + G_A H^-1 f),
    U = -H^-1 (f + G_A' lam).

The active-set method factors through this package's Cholesky kernels; the
enumeration oracle deliberately goes through numpy's own solver so that the
two baselines do not share a linear-algebra code path.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .errors import (
    InfeasibleStartError,
    NoFeasiblePointError,
    TooManyConstraintsError,
)
from .linalg import as_vector, cholesky_factor, cholesky_solve, cholesky_solve_matrix
from .qp import QpProblem, QpSolution, SolveStatus, max_violation, objective
from .rpm import RpmConfig, rpm_solve

# Feasibility slack accepted for starting points and returned iterates.
FEASIBILITY_TOL = 1e-9
# Enumeration cap: 2^q candidate active sets gets out of hand quickly.
MAX_ENUMERATION_ROWS = 20


def active_set_solve(qp: QpProblem, u0_feasible, max_iters: int | None = None) -> QpSolution:
    """Textbook primal active-set method for a strictly convex QP.

    Needs a starting point satisfying G U <= w + FEASIBILITY_TOL (see
    find_feasible_point).  The working set starts empty; every blocking row
    added by the ratio test is automatically independent of the current
    working set, so the reduced system stays positive definite.
    """
    u = as_vector(u0_feasible, "U0")
    if u.shape[0] != qp.n:
        raise InfeasibleStartError(f"start has length {u.shape[0]}, expected {qp.n}")
    scale = max(1.0, float(np.max(np.abs(qp.w))) if qp.q else 1.0)
    if max_violation(qp, u) > FEASIBILITY_TOL * scale:
        raise InfeasibleStartError(
            f"starting point violates constraints by {max_violation(qp, u):.3e}"
        )
    if max_iters is None:
        max_iters = 50 + 10 * qp.q

    lower = cholesky_factor(qp.H)
    hinv_f = cholesky_solve(lower, qp.f)
    if qp.q:
        hinv_gt = cholesky_solve_matrix(lower, qp.G.T)
        gram = qp.G @ hinv_gt
        g_hinv_f = qp.G @ hinv_f
    u_free = -hinv_f

    working: list[int] = []
    iterations = 0
    status = SolveStatus.MAX_ITERATIONS
    for iterations in range(1, max_iters + 1):
        if working:
            idx = np.array(working)
            rhs = -(qp.w[idx] + g_hinv_f[idx])
            sub = cholesky_factor(gram[np.ix_(idx, idx)])
            lam = cholesky_solve(sub, rhs)
            u_eq = u_free - hinv_gt[:, idx] @ lam
        else:
            lam = np.zeros(0)
            u_eq = u_free

        step = u_eq - u
        if np.max(np.abs(step), initial=0.0) <= 1e-11 * max(1.0, np.max(np.abs(u), initial=0.0)):
            if lam.size == 0 or np.min(lam) >= -FEASIBILITY_TOL:
                u = u_eq
                status = SolveStatus.OPTIMAL
                break
            working.pop(int(np.argmin(lam)))
            continue

        alpha = 1.0
        blocker = -1
        if qp.q:
            outside = np.setdiff1d(np.arange(qp.q), working, assume_unique=False)
            if outside.size:
                advance = qp.G[outside] @ step
                slack = qp.w[outside] - qp.G[outside] @ u
                candidates = advance > 1e-12 * scale
                if np.any(candidates):
                    ratios = slack[candidates] / advance[candidates]
                    pos = int(np.argmin(ratios))
                    if ratios[pos] < alpha:
                        alpha = max(ratios[pos], 0.0)
                        blocker = int(outside[candidates][pos])
        u = u + alpha * step
        if blocker >= 0:
            working.append(blocker)

    return QpSolution(
        u_star=u,
        objective=objective(qp, u),
        status=status,
        outer_iterations=0,
        inner_iterations=iterations,
        max_violation=max_violation(qp, u),
    )


def kkt_enumerate(qp: QpProblem) -> QpSolution:
    """Ground-truth oracle: try every candidate active set, smallest first.

    For each subset of constraint rows (cardinality at most n) the
    equality-constrained stationarity system is solved; the first candidate
    that is primal feasible with nonnegative multipliers is the unique global
    optimum of the strictly convex QP.  Enumerating in (cardinality,
    lexicographic) order makes the returned active set deterministic when
    several subsets describe the same point.
    """
    if qp.q > MAX_ENUMERATION_ROWS:
        raise TooManyConstraintsError(
            f"{qp.q} rows exceed the enumeration cap of {MAX_ENUMERATION_ROWS}"
        )
    hinv_f = np.linalg.solve(qp.H, qp.f)
    u_free = -hinv_f
    if qp.q:
        hinv_gt = np.linalg.solve(qp.H, qp.G.T)
        gram = qp.G @ hinv_gt
        g_hinv_f = qp.G @ hinv_f

    scale = max(1.0, float(np.max(np.abs(qp.w))) if qp.q else 1.0)
    feas_tol = FEASIBILITY_TOL * scale
    examined = 0
    for size in range(0, min(qp.n, qp.q) + 1):
        for subset in combinations(range(qp.q), size):
            examined += 1
            if size == 0:
                u = u_free
            else:
                idx = np.array(subset)
                try:
                    lam = np.linalg.solve(
                        gram[np.ix_(idx, idx)], -(qp.w[idx] + g_hinv_f[idx])
                    )
                except np.linalg.LinAlgError:
                    continue
                if np.min(lam) < -FEASIBILITY_TOL * max(1.0, np.max(np.abs(lam))):
                    continue
                u = u_free - hinv_gt[:, idx] @ lam
            if qp.q and np.max(qp.G @ u - qp.w) > feas_tol:
                continue
            return QpSolution(
                u_star=u,
                objective=objective(qp, u),
                status=SolveStatus.OPTIMAL,
                outer_iterations=0,
                inner_iterations=examined,
                max_violation=max_violation(qp, u),
            )
    raise NoFeasiblePointError("no candidate active set produced a feasible KKT point")


def find_feasible_point(qp: QpProblem, tol: float = FEASIBILITY_TOL) -> np.ndarray:
    """Point satisfying G U <= w + tol, for starting the active-set method.

    The origin is tried first.  Otherwise the violation is driven down by the
    penalty machinery itself, applied to a feasibility problem with the
    original objective replaced by a small regularizer (0.5 |U|^2, which
    keeps the subproblem strictly convex without favoring any row).
    """
    scale = max(1.0, float(np.max(np.abs(qp.w))) if qp.q else 1.0)
    origin = np.zeros(qp.n)
    if max_violation(qp, origin) <= tol * scale:
        return origin

    phase1 = QpProblem(H=np.eye(qp.n), f=np.zeros(qp.n), G=qp.G, w=qp.w)
    cfg = RpmConfig(
        slack_tol=tol * scale,
        conv_tol=1e-9,
        k_init=1e3,
        k_growth=100.0,
        k_max=1e18,
        max_outer=40,
    )
    solution = rpm_solve(phase1, cfg, u0=origin)
    if max_violation(qp, solution.u_star) > tol * scale:
        raise InfeasibleStartError(
            f"could not reduce violation below {tol * scale:.3e} "
            f"(best {solution.max_violation:.3e}); the problem may be infeasible"
        )
    return solution.u_star
