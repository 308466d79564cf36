"""Robust penalty method: a hinge-squared penalty wrapped around a BFGS core.

Constraint violations are folded into the objective as

    F(U) = 0.5 U' H U + f' U + sum_i K_i * max(0, g_i(U))^2,

which is minimized without constraints by a quasi-Newton BFGS solver.  The
outer loop grows the penalty gains until the iterate is feasible to within a
slack tolerance, and, unlike a classic penalty loop, keeps optimizing after
entering the feasible region, so interior optima and infeasible starting
points are both handled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionMismatchError,
    LineSearchError,
    NotDescentError,
    NumericalFailureError,
)
from .linalg import as_vector, cholesky_factor, cholesky_solve_matrix
from .qp import QpProblem, QpSolution, SolveStatus, constraint_values, max_violation, objective

# Armijo trials: t = 1 followed by at most this many shrinks.
MAX_BACKTRACKS = 60


@dataclass
class RpmConfig:
    """Tuning knobs for the penalty outer loop and the BFGS inner solver.

    slack_tol     : largest accepted constraint violation (feasibility test)
    conv_tol      : relative-step convergence tolerance, used by both loops
    k_init        : initial penalty gain
    k_growth      : per-outer-iteration gain multiplier while infeasible
    k_max         : penalty-gain cap, guards against overflow and a hopelessly
                    ill-conditioned augmented Hessian
    max_outer     : outer (penalty) iteration limit
    max_inner     : BFGS iteration limit per outer iteration
    ls_shrink     : backtracking shrink factor
    ls_c          : Armijo sufficient-decrease constant
    curvature_eps : skip the BFGS update when y's < eps * |y| * |s|
    warm_hessian  : start BFGS from H^-1 (one Cholesky solve) instead of I
    """

    slack_tol: float = 1e-6
    conv_tol: float = 1e-6
    k_init: float = 0.1
    k_growth: float = 10.0
    k_max: float = 1e12
    max_outer: int = 30
    max_inner: int = 200
    ls_shrink: float = 0.5
    ls_c: float = 1e-4
    curvature_eps: float = 1e-12
    warm_hessian: bool = False

    def __post_init__(self):
        if self.slack_tol <= 0:
            raise ValueError("slack_tol must be > 0")
        if self.conv_tol <= 0:
            raise ValueError("conv_tol must be > 0")
        if self.k_init <= 0:
            raise ValueError("k_init must be > 0")
        if self.k_growth <= 1:
            raise ValueError("k_growth must be > 1")
        if self.k_max < self.k_init:
            raise ValueError("k_max must be >= k_init")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration limits must be >= 1")
        if not 0.0 < self.ls_shrink < 1.0:
            raise ValueError("ls_shrink must lie in (0, 1)")
        if not 0.0 < self.ls_c < 1.0:
            raise ValueError("ls_c must lie in (0, 1)")
        if self.curvature_eps <= 0:
            raise ValueError("curvature_eps must be > 0")


@dataclass
class BfgsState:
    """One BFGS iterate: the point, the inverse-Hessian estimate, its gradient."""

    u: np.ndarray
    hinv: np.ndarray
    grad: np.ndarray
    k: int = 0


class BfgsResult(NamedTuple):
    u: np.ndarray
    f_value: float
    iterations: int
    converged: bool
    f_history: tuple
    hinv: np.ndarray


def penalty(g, gains) -> float:
    """sum_i K_i * max(0, g_i)^2, the hinge-squared violation penalty."""
    g = as_vector(g, "g")
    gains = as_vector(gains, "K")
    if g.shape != gains.shape:
        raise DimensionMismatchError(f"g has shape {g.shape} but K has shape {gains.shape}")
    hinge = np.maximum(0.0, g)
    return float(gains @ (hinge * hinge))


def augmented_objective(qp: QpProblem, gains, u) -> float:
    """Objective plus the penalty on violated rows: F = J + K' P."""
    return objective(qp, u) + penalty(constraint_values(qp, u), gains)


def augmented_gradient(qp: QpProblem, gains, u) -> np.ndarray:
    """Gradient of the augmented objective: H U + f + 2 G' (K * max(0, g)).

    At g_i = 0 exactly the hinge term contributes nothing for row i, so on
    the feasible set the gradient coincides with the plain QP gradient.
    """
    u = as_vector(u, "U")
    gains = as_vector(gains, "K")
    if gains.shape[0] != qp.q:
        raise DimensionMismatchError(f"K has length {gains.shape[0]}, expected {qp.q}")
    grad = qp.H @ u + qp.f
    if qp.q:
        hinge = np.maximum(0.0, constraint_values(qp, u))
        grad = grad + 2.0 * (qp.G.T @ (gains * hinge))
    return grad


def bfgs_direction(state: BfgsState) -> np.ndarray:
    """Quasi-Newton search direction -Hinv @ grad.

    Hinv approximates the inverse Hessian, so no linear solve is needed per
    iteration; with Hinv = H^-1 exactly this is the Newton step.
    """
    return state.hinv @ (-state.grad)


def backtracking_search(qp, gains, u, p, grad, cfg: RpmConfig, f0=None) -> float:
    """Largest t in {1, rho, rho^2, ...} passing the Armijo test along p.

    Requires grad' p < 0 (raises NotDescentError otherwise).  Gives up after
    MAX_BACKTRACKS shrinks and raises LineSearchError, which callers treat as
    a numerical breakdown.
    """
    slope = float(grad @ p)
    if slope >= 0.0:
        raise NotDescentError(f"directional derivative {slope:.3e} is not negative")
    if f0 is None:
        f0 = augmented_objective(qp, gains, u)
    t = 1.0
    for _ in range(MAX_BACKTRACKS + 1):
        if augmented_objective(qp, gains, u + t * p) <= f0 + cfg.ls_c * t * slope:
            return t
        t *= cfg.ls_shrink
    raise LineSearchError(f"no sufficient decrease after {MAX_BACKTRACKS} shrinks")


def bfgs_update(hinv, s, y, curvature_eps: float) -> np.ndarray:
    """Inverse-BFGS update of the approximation from the step s and gradient change y.

    With rho = 1 / (y's):  Hinv+ = (I - rho s y') Hinv (I - rho y s') + rho s s'.
    The update is skipped whenever y's <= curvature_eps * |y| * |s|, which is
    what keeps the approximation symmetric positive definite.
    """
    hinv = np.asarray(hinv, dtype=float)
    s = as_vector(s, "s")
    y = as_vector(y, "y")
    if hinv.shape != (s.shape[0], s.shape[0]) or y.shape != s.shape:
        raise DimensionMismatchError(
            f"incompatible update shapes: Hinv {hinv.shape}, s {s.shape}, y {y.shape}"
        )
    ys = float(y @ s)
    if ys <= curvature_eps * np.linalg.norm(y) * np.linalg.norm(s):
        return hinv.copy()
    rho = 1.0 / ys
    n = s.shape[0]
    left = np.eye(n) - rho * np.outer(s, y)
    updated = left @ hinv @ left.T + rho * np.outer(s, s)
    return 0.5 * (updated + updated.T)


def bfgs_solve(qp: QpProblem, gains, u0, cfg: RpmConfig, hinv0=None) -> BfgsResult:
    """Minimize the augmented objective with fixed penalty gains.

    Starts from the identity inverse-Hessian estimate (or hinv0 when given),
    and stops when the relative step |U+ - U|_inf / max(1, |U|_inf) drops
    below cfg.conv_tol or max_inner iterations are spent.  A line-search
    breakdown with a clearly nonzero gradient raises NumericalFailureError
    carrying the last iterate.
    """
    u = as_vector(u0, "U0")
    gains = as_vector(gains, "K")
    hinv = np.eye(qp.n) if hinv0 is None else np.array(hinv0, dtype=float)
    state = BfgsState(u=u, hinv=hinv, grad=augmented_gradient(qp, gains, u))
    f_val = augmented_objective(qp, gains, u)
    history = [f_val]
    converged = False

    while state.k < cfg.max_inner:
        p = bfgs_direction(state)
        # A full step already below the convergence tolerance cannot move the
        # iterate meaningfully for any t <= 1: accept the point as converged.
        if np.max(np.abs(p), initial=0.0) <= cfg.conv_tol * max(1.0, np.max(np.abs(state.u))):
            converged = True
            break
        try:
            t = backtracking_search(qp, gains, state.u, p, state.grad, cfg, f0=f_val)
        except (NotDescentError, LineSearchError) as err:
            raise NumericalFailureError(
                f"line search failed with nonzero gradient: {err}",
                u=state.u,
                f_value=f_val,
                iterations=state.k,
            ) from err
        u_next = state.u + t * p
        grad_next = augmented_gradient(qp, gains, u_next)
        step = u_next - state.u
        rel_step = np.max(np.abs(step)) / max(1.0, np.max(np.abs(state.u)))
        state.hinv = bfgs_update(state.hinv, step, grad_next - state.grad, cfg.curvature_eps)
        state.u = u_next
        state.grad = grad_next
        state.k += 1
        f_val = augmented_objective(qp, gains, state.u)
        history.append(f_val)
        if rel_step < cfg.conv_tol:
            converged = True
            break

    return BfgsResult(state.u, f_val, state.k, converged, tuple(history), state.hinv)


def rpm_solve(
    qp: QpProblem,
    cfg: RpmConfig | None = None,
    u0=None,
    outer_callback=None,
) -> QpSolution:
    """Solve the QP by the robust penalty method.

    Outer loop: evaluate the violation at the current iterate; whenever it
    exceeds the slack tolerance, grow the (uniform) penalty gains, starting
    from k_init and capped at k_max.  Gains never shrink within a run: the
    penalty minimizer sits just outside the feasible set by an amount
    inversely proportional to the gain, so an iterate hovering at the slack
    boundary must be answered with more penalty, not a restart.  Each outer
    iteration runs the BFGS solver on the fixed-gain augmented objective.
    Terminates optimal when the iterate is feasible within slack_tol and the
    outer relative step is below conv_tol; the starting point may be
    anywhere, feasible or not.

    The inverse-Hessian estimate is carried from one outer iteration to the
    next: each gain growth only rescales the penalty curvature, so the
    estimate learned at the previous gain is a far better start than the
    identity and keeps the inner solver effective once the gains are large.

    outer_callback, when given, is invoked as
    outer_callback(outer_index, gain, violation) before each inner solve;
    it exists for diagnostics and tests of the gain schedule.
    """
    cfg = cfg or RpmConfig()
    u = np.zeros(qp.n) if u0 is None else as_vector(u0, "U0")
    if u.shape[0] != qp.n:
        raise DimensionMismatchError(f"U0 has length {u.shape[0]}, expected {qp.n}")

    hinv_carry = None
    if cfg.warm_hessian:
        hinv_carry = cholesky_solve_matrix(cholesky_factor(qp.H), np.eye(qp.n))

    gain = None
    total_inner = 0
    status = SolveStatus.MAX_ITERATIONS
    outer = 0
    viol = max_violation(qp, u)

    for outer in range(1, cfg.max_outer + 1):
        viol = max_violation(qp, u)
        infeasible = viol > cfg.slack_tol
        if infeasible:
            gain = cfg.k_init if gain is None else min(gain * cfg.k_growth, cfg.k_max)
        elif gain is None:
            gain = cfg.k_init
        gains = np.full(qp.q, gain)
        if outer_callback is not None:
            outer_callback(outer, gain, viol)

        try:
            result = bfgs_solve(qp, gains, u, cfg, hinv0=hinv_carry)
        except NumericalFailureError as err:
            u_last = err.u if err.u is not None else u
            return QpSolution(
                u_star=u_last,
                objective=objective(qp, u_last),
                status=SolveStatus.NUMERICAL_FAILURE,
                outer_iterations=outer,
                inner_iterations=total_inner + err.iterations,
                max_violation=max_violation(qp, u_last),
            )
        total_inner += result.iterations
        hinv_carry = result.hinv
        rel_step = np.max(np.abs(result.u - u), initial=0.0) / max(1.0, np.max(np.abs(u), initial=0.0))
        u = result.u
        viol = max_violation(qp, u)

        if rel_step < cfg.conv_tol:
            if viol <= cfg.slack_tol:
                status = SolveStatus.OPTIMAL
                break
            if infeasible and gain is not None and gain >= cfg.k_max:
                # The gain cap is reached and the iterate has stopped moving:
                # no amount of further penalty growth is available.
                status = SolveStatus.INFEASIBLE
                break

    return QpSolution(
        u_star=u,
        objective=objective(qp, u),
        status=status,
        outer_iterations=outer,
        inner_iterations=total_inner,
        max_violation=viol,
    )
