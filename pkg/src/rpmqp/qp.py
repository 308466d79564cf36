"""Problem and solution model for dense inequality-constrained convex QPs.

The canonical form used everywhere in this package is

    minimize    0.5 * U' H U + f' U
    subject to  G U <= w

with H symmetric positive definite.  Bounds and >= rows are negated and
stacked into G at construction time; there is no separate bound handling and
no additive constant in the objective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatchError
from .linalg import as_matrix, as_vector

# Allowed relative asymmetry of the Hessian.
HESSIAN_SYMMETRY_RTOL = 1e-10


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class QpProblem:
    """Immutable dense QP data (H, f, G, w).

    H : (n, n) symmetric positive definite Hessian
    f : (n,)   linear cost term
    G : (q, n) inequality left-hand side
    w : (q,)   inequality right-hand side

    q = 0 (an unconstrained problem) is legal; G must then have shape (0, n).
    Positive definiteness of H is not verified here (it is checkable with
    linalg.cholesky_factor); symmetry and dimensions are.
    """

    H: np.ndarray
    f: np.ndarray
    G: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        h = as_matrix(self.H, "H")
        f = as_vector(self.f, "f")
        g = np.array(self.G, dtype=float)
        if g.size == 0:
            g = g.reshape(0, f.shape[0])
        g = as_matrix(g, "G")
        w = np.array(self.w, dtype=float).reshape(-1)
        w = as_vector(w, "w")

        n = f.shape[0]
        if h.shape != (n, n):
            raise DimensionMismatchError(f"H has shape {h.shape}, expected ({n}, {n})")
        if g.shape[1] != n:
            raise DimensionMismatchError(f"G has {g.shape[1]} columns, expected {n}")
        if g.shape[0] != w.shape[0]:
            raise DimensionMismatchError(
                f"G has {g.shape[0]} rows but w has length {w.shape[0]}"
            )
        scale = max(np.max(np.abs(h)), 1e-300)
        if np.max(np.abs(h - h.T)) > HESSIAN_SYMMETRY_RTOL * scale:
            raise DimensionMismatchError("H is not symmetric")

        for name, arr in (("H", h), ("f", f), ("G", g), ("w", w)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        """Number of decision variables."""
        return self.f.shape[0]

    @property
    def q(self) -> int:
        """Number of inequality rows."""
        return self.w.shape[0]

    @classmethod
    def from_dict(cls, data: dict) -> "QpProblem":
        """Build from the JSON object layout {"H": rows, "f": [...], "G": rows, "w": [...]}."""
        missing = [k for k in ("H", "f", "G", "w") if k not in data]
        if missing:
            raise DimensionMismatchError(f"problem object is missing keys: {missing}")
        return cls(
            H=np.array(data["H"], dtype=float),
            f=np.array(data["f"], dtype=float),
            G=np.array(data["G"], dtype=float),
            w=np.array(data["w"], dtype=float),
        )

    @classmethod
    def load_json(cls, path) -> "QpProblem":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class QpSolution:
    """Solver output: the point, its objective, and run diagnostics."""

    u_star: np.ndarray
    objective: float
    status: SolveStatus
    outer_iterations: int
    inner_iterations: int
    max_violation: float


def objective(qp: QpProblem, u) -> float:
    """0.5 * U' H U + f' U, with no additive constant."""
    u = _check_point(qp, u)
    return float(0.5 * u @ qp.H @ u + qp.f @ u)


def objective_gradient(qp: QpProblem, u) -> np.ndarray:
    """Gradient H U + f of the quadratic objective."""
    u = _check_point(qp, u)
    return qp.H @ u + qp.f


def constraint_values(qp: QpProblem, u) -> np.ndarray:
    """Constraint values g = G U - w; entry i > 0 means row i is violated."""
    u = _check_point(qp, u)
    return qp.G @ u - qp.w


def max_violation(qp: QpProblem, u) -> float:
    """max(0, max_i g_i); zero for a feasible point or an unconstrained problem."""
    g = constraint_values(qp, u)
    if g.size == 0:
        return 0.0
    return float(max(0.0, np.max(g)))


def recover_multipliers(qp: QpProblem, u, active_tol: float) -> np.ndarray:
    """Least-squares multipliers on the active rows (|g_i| <= active_tol).

    Inactive rows get exactly zero.  No sign clipping is applied, so a
    genuinely non-optimal point shows up as a negative multiplier in
    kkt_residual rather than being masked here.
    """
    u = _check_point(qp, u)
    lam = np.zeros(qp.q)
    g = constraint_values(qp, u)
    active = np.flatnonzero(np.abs(g) <= active_tol)
    if active.size:
        rhs = -(qp.H @ u + qp.f)
        sol, *_ = np.linalg.lstsq(qp.G[active].T, rhs, rcond=None)
        lam[active] = sol
    return lam


def kkt_residual(qp: QpProblem, u, lam) -> float:
    """Worst violation of the first-order optimality conditions at (U, lambda).

    Returns the max of stationarity |H U + f + G' lam|_inf, primal feasibility
    max(0, g)_inf, complementarity max_i |lam_i * g_i|, and dual feasibility
    max(0, -min lam).
    """
    u = _check_point(qp, u)
    lam = as_vector(lam, "lambda")
    if lam.shape[0] != qp.q:
        raise DimensionMismatchError(f"lambda has length {lam.shape[0]}, expected {qp.q}")
    stationarity = qp.H @ u + qp.f
    if qp.q:
        stationarity = stationarity + qp.G.T @ lam
    res = float(np.max(np.abs(stationarity))) if stationarity.size else 0.0
    if qp.q:
        g = constraint_values(qp, u)
        res = max(res, max_violation(qp, u))
        res = max(res, float(np.max(np.abs(lam * g))))
        res = max(res, float(max(0.0, -np.min(lam))))
    return res


def _check_point(qp: QpProblem, u) -> np.ndarray:
    u = as_vector(u, "U")
    if u.shape[0] != qp.n:
        raise DimensionMismatchError(f"U has length {u.shape[0]}, expected {qp.n}")
    return u
