"""Reference-tracking linear MPC on top of the dense QP solvers.

The per-step optimal control problem

    min   sum_{k=1..N} (y_k - r_k)' Q (y_k - r_k)  +  sum_{k=0..N-1} du_k' R du_k
    s.t.  x_{k+1} = A x_k + B u_k,   y_k = C x_k + D u_k,
          du_k = u_k - u_{k-1},      u_{-1} = previous applied input,
          input, move, and output bounds at every step,

is condensed into the input sequence U = (u_0, ..., u_{N-1}): with the
stacked prediction Y = Psi x_0 + Theta U, the block-diagonal weights Qbar and
Rbar, the lower-bidiagonal difference operator T, and E placing the previous
input in the first block,

    H = 2 (Theta' Qbar Theta + T' Rbar T)
    f = 2 (Theta' Qbar (Psi x_0 - Yref) - T' Rbar E u_prev),

and every bound becomes a row of G U <= w.  Note the tracking terms run over
y_1..y_N: with D = 0 the current output does not depend on U at all, so
penalizing y_0 would only add a constant.

The closed-loop simulator applies the receding-horizon rule: solve, apply the
first input, step the plant, shift the previous solution as the next warm
start.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    SolverError,
    ZeroReferenceCostError,
)
from .linalg import as_matrix, as_vector, cholesky_factor
from .qp import QpProblem, SolveStatus, max_violation
from .reference import active_set_solve, find_feasible_point
from .rpm import RpmConfig, rpm_solve

# Feasibility slack accepted when reusing U = 0 as an active-set start.
_COLD_START_TOL = 1e-9


@dataclass(frozen=True)
class LtiModel:
    """Discrete-time LTI plant x+ = A x + B u, y = C x + D u with sample time ts."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    ts: float

    def __post_init__(self):
        a = as_matrix(self.A, "A")
        b = as_matrix(self.B, "B")
        c = as_matrix(self.C, "C")
        d = as_matrix(self.D, "D")
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionMismatchError(f"A must be square, got {a.shape}")
        if b.shape[0] != n:
            raise DimensionMismatchError(f"B has {b.shape[0]} rows, expected {n}")
        if c.shape[1] != n:
            raise DimensionMismatchError(f"C has {c.shape[1]} columns, expected {n}")
        if d.shape != (c.shape[0], b.shape[1]):
            raise DimensionMismatchError(
                f"D has shape {d.shape}, expected ({c.shape[0]}, {b.shape[1]})"
            )
        if not self.ts > 0:
            raise ValueError("ts must be positive")
        for name, arr in (("A", a), ("B", b), ("C", c), ("D", d)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class MpcSpec:
    """MPC tuning: plant, horizon, weights, and box bounds.

    Bounds may contain +-inf entries; only finite rows generate constraints.
    du bounds are per-step move limits (slew rate times the sample time).
    """

    model: LtiModel
    N: int
    Q: np.ndarray
    R: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray
    du_min: np.ndarray
    du_max: np.ndarray
    y_min: np.ndarray
    y_max: np.ndarray

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("horizon must be >= 1")
        m = self.model.n_outputs
        l = self.model.n_inputs
        q_mat = as_matrix(self.Q, "Q")
        r_mat = as_matrix(self.R, "R")
        if q_mat.shape != (m, m):
            raise DimensionMismatchError(f"Q has shape {q_mat.shape}, expected ({m}, {m})")
        if r_mat.shape != (l, l):
            raise DimensionMismatchError(f"R has shape {r_mat.shape}, expected ({l}, {l})")
        if np.max(np.abs(q_mat - q_mat.T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(q_mat))):
            raise ValueError("Q must be symmetric")
        if np.min(np.linalg.eigvalsh(q_mat)) < -1e-10 * max(1.0, np.max(np.abs(q_mat))):
            raise ValueError("Q must be positive semidefinite")
        cholesky_factor(r_mat)  # R must be PD for the condensed Hessian to be PD

        bounds = {}
        for name, size in (
            ("u_min", l), ("u_max", l), ("du_min", l), ("du_max", l),
            ("y_min", m), ("y_max", m),
        ):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            if arr.shape[0] != size:
                raise DimensionMismatchError(f"{name} has length {arr.shape[0]}, expected {size}")
            if np.any(np.isnan(arr)):
                raise ValueError(f"{name} contains NaN")
            bounds[name] = arr
        both = np.isfinite(bounds["u_min"]) & np.isfinite(bounds["u_max"])
        if np.any(bounds["u_min"][both] >= bounds["u_max"][both]):
            raise ValueError("u_min must be < u_max elementwise")
        for lo, hi in (("du_min", "du_max"), ("y_min", "y_max")):
            both = np.isfinite(bounds[lo]) & np.isfinite(bounds[hi])
            if np.any(bounds[lo][both] > bounds[hi][both]):
                raise ValueError(f"{lo} must be <= {hi} elementwise")

        for name, arr in (("Q", q_mat), ("R", r_mat)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        for name, arr in bounds.items():
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass
class StepStats:
    """Per-step solver diagnostics recorded in the trace."""

    outer_iterations: int
    inner_iterations: int
    max_violation: float
    status: SolveStatus
    solve_time_s: float


@dataclass
class Trace:
    """Closed-loop time series; every list has length T_sim."""

    time: list = field(default_factory=list)
    x: list = field(default_factory=list)
    u: list = field(default_factory=list)
    y: list = field(default_factory=list)
    y_ref: list = field(default_factory=list)
    stage_cost: list = field(default_factory=list)
    cumulative_cost: float = 0.0
    solver_stats: list = field(default_factory=list)


def step_plant(model: LtiModel, x, u):
    """One plant step: returns (x_next, y) = (A x + B u, C x + D u)."""
    x = as_vector(x, "x")
    u = as_vector(u, "u")
    if x.shape[0] != model.n_states:
        raise DimensionMismatchError(f"x has length {x.shape[0]}, expected {model.n_states}")
    if u.shape[0] != model.n_inputs:
        raise DimensionMismatchError(f"u has length {u.shape[0]}, expected {model.n_inputs}")
    return model.A @ x + model.B @ u, model.C @ x + model.D @ u


def predict_matrices(model: LtiModel, n_steps: int):
    """Stacked prediction matrices for y_1 .. y_N: Y = Psi x0 + Theta U.

    Block row k (for y_{k+1}, k = 0..N-1): Psi block C A^{k+1}; Theta block
    (k, j) = C A^{k-j} B for j <= k.  A nonzero D additionally lands at block
    (k, k+1) for k < N-1; the terminal output would need the out-of-horizon
    input u_N, whose feedthrough is necessarily dropped.
    """
    if n_steps < 1:
        raise ValueError("prediction horizon must be >= 1")
    n, l, m = model.n_states, model.n_inputs, model.n_outputs
    psi = np.zeros((m * n_steps, n))
    theta = np.zeros((m * n_steps, l * n_steps))

    # c_a_pow[d] = C A^d, c_a_pow_b[d] = C A^d B
    c_a_pow = [model.C]
    for _ in range(n_steps):
        c_a_pow.append(c_a_pow[-1] @ model.A)
    c_a_pow_b = [c_a_pow[d] @ model.B for d in range(n_steps)]

    for k in range(n_steps):
        psi[k * m : (k + 1) * m] = c_a_pow[k + 1]
        for j in range(k + 1):
            theta[k * m : (k + 1) * m, j * l : (j + 1) * l] = c_a_pow_b[k - j]
        if k + 1 < n_steps and np.any(model.D):
            theta[k * m : (k + 1) * m, (k + 1) * l : (k + 2) * l] = model.D
    return psi, theta


def _difference_operator(n_steps: int, l: int):
    """T maps U to (u_0, u_1 - u_0, ...); E u_prev completes du_0 = u_0 - u_prev."""
    band = np.eye(n_steps) - np.eye(n_steps, k=-1)
    t_op = np.kron(band, np.eye(l))
    e_op = np.zeros((n_steps * l, l))
    e_op[:l, :l] = np.eye(l)
    return t_op, e_op


def condense(spec: MpcSpec, x0, u_prev, y_ref) -> QpProblem:
    """Condense the tracking problem at state x0 into a dense QP over U.

    y_ref supplies the N reference vectors for the predicted outputs
    y_1 .. y_N.  Constraint rows are stacked in a fixed order: input upper,
    input lower, move upper, move lower, output upper, output lower, keeping
    only rows with finite bounds.
    """
    model = spec.model
    n_steps, l, m = spec.N, model.n_inputs, model.n_outputs
    x0 = as_vector(x0, "x0")
    u_prev = as_vector(u_prev, "u_prev")
    if x0.shape[0] != model.n_states:
        raise DimensionMismatchError(f"x0 has length {x0.shape[0]}, expected {model.n_states}")
    if u_prev.shape[0] != l:
        raise DimensionMismatchError(f"u_prev has length {u_prev.shape[0]}, expected {l}")
    refs = np.array(y_ref, dtype=float)
    if refs.shape != (n_steps, m):
        raise DimensionMismatchError(f"y_ref has shape {refs.shape}, expected ({n_steps}, {m})")
    y_ref_stack = refs.reshape(-1)

    psi, theta = predict_matrices(model, n_steps)
    q_bar = np.kron(np.eye(n_steps), spec.Q)
    r_bar = np.kron(np.eye(n_steps), spec.R)
    t_op, e_op = _difference_operator(n_steps, l)

    free_response = psi @ x0
    hessian = 2.0 * (theta.T @ q_bar @ theta + t_op.T @ r_bar @ t_op)
    hessian = 0.5 * (hessian + hessian.T)
    linear = 2.0 * (theta.T @ (q_bar @ (free_response - y_ref_stack)) - t_op.T @ (r_bar @ (e_op @ u_prev)))

    try:
        cholesky_factor(hessian)
    except NotPositiveDefiniteError as err:
        raise NotPositiveDefiniteError(
            f"condensed Hessian is not positive definite (degenerate weights): {err}"
        ) from err

    eye_u = np.eye(n_steps * l)
    rows = []
    rhs = []

    def keep_finite(lhs, bound_rows, bound_stack):
        mask = np.isfinite(bound_stack)
        if np.any(mask):
            rows.append(lhs[mask])
            rhs.append(bound_rows[mask])

    u_hi = np.tile(spec.u_max, n_steps)
    u_lo = np.tile(spec.u_min, n_steps)
    du_hi = np.tile(spec.du_max, n_steps)
    du_lo = np.tile(spec.du_min, n_steps)
    y_hi = np.tile(spec.y_max, n_steps)
    y_lo = np.tile(spec.y_min, n_steps)
    e_u_prev = e_op @ u_prev

    keep_finite(eye_u, u_hi, u_hi)
    keep_finite(-eye_u, -u_lo, u_lo)
    keep_finite(t_op, du_hi + e_u_prev, du_hi)
    keep_finite(-t_op, -du_lo - e_u_prev, du_lo)
    keep_finite(theta, y_hi - free_response, y_hi)
    keep_finite(-theta, -y_lo + free_response, y_lo)

    if rows:
        g_mat = np.vstack(rows)
        w_vec = np.concatenate(rhs)
    else:
        g_mat = np.zeros((0, n_steps * l))
        w_vec = np.zeros(0)
    return QpProblem(H=hessian, f=linear, G=g_mat, w=w_vec)


def shift_warm_start(u_prev_solution, n_steps: int, l: int) -> np.ndarray:
    """Shift the previous input plan one step and repeat its final block."""
    u_prev_solution = as_vector(u_prev_solution, "U_prev")
    if u_prev_solution.shape[0] != n_steps * l:
        raise DimensionMismatchError(
            f"plan has length {u_prev_solution.shape[0]}, expected {n_steps * l}"
        )
    blocks = u_prev_solution.reshape(n_steps, l)
    return np.vstack([blocks[1:], blocks[-1:]]).reshape(-1)


def closed_loop_simulate(
    spec: MpcSpec,
    solver: str,
    x_init,
    u_init_prev,
    y_ref_trajectory,
    t_sim: int,
    rpm_config: RpmConfig | None = None,
) -> Trace:
    """Receding-horizon simulation for t_sim steps.

    solver is "rpm" (warm-started from the shifted previous solution, all
    zeros on the first step) or "asm" (cold start every step: U = 0 when
    feasible, a feasibility phase otherwise).  If a step's solve fails or
    ends non-optimal, the previous input is held and the step is marked in
    solver_stats; the simulation keeps going.

    The reference trajectory needs at least t_sim + N rows; shorter ones are
    extended by holding the final row.
    """
    if solver not in ("rpm", "asm"):
        raise ValueError(f"unknown solver '{solver}', expected 'rpm' or 'asm'")
    if t_sim < 1:
        raise ValueError("t_sim must be >= 1")
    model = spec.model
    l, m = model.n_inputs, model.n_outputs
    cfg = rpm_config or RpmConfig()

    x = as_vector(x_init, "x_init")
    u_prev = as_vector(u_init_prev, "u_init_prev")
    refs = np.atleast_2d(np.array(y_ref_trajectory, dtype=float))
    if refs.shape[1] != m:
        raise DimensionMismatchError(f"reference rows have length {refs.shape[1]}, expected {m}")
    needed = t_sim + spec.N
    if refs.shape[0] < needed:
        pad = np.repeat(refs[-1:], needed - refs.shape[0], axis=0)
        refs = np.vstack([refs, pad])

    trace = Trace()
    plan = np.zeros(spec.N * l)
    for step in range(t_sim):
        qp = condense(spec, x, u_prev, refs[step + 1 : step + 1 + spec.N])
        started = _time.perf_counter()
        solution = None
        try:
            if solver == "rpm":
                solution = rpm_solve(qp, cfg, u0=plan)
            else:
                if max_violation(qp, np.zeros(qp.n)) <= _COLD_START_TOL * max(
                    1.0, float(np.max(np.abs(qp.w))) if qp.q else 1.0
                ):
                    start = np.zeros(qp.n)
                else:
                    start = find_feasible_point(qp)
                solution = active_set_solve(qp, start)
        except SolverError:
            solution = None
        elapsed = _time.perf_counter() - started

        if solution is not None and solution.status is SolveStatus.OPTIMAL:
            u_apply = solution.u_star[:l].copy()
            plan = shift_warm_start(solution.u_star, spec.N, l)
            stats = StepStats(
                outer_iterations=solution.outer_iterations,
                inner_iterations=solution.inner_iterations,
                max_violation=solution.max_violation,
                status=solution.status,
                solve_time_s=elapsed,
            )
        else:
            # Recovery policy: hold the previously applied input.
            u_apply = u_prev.copy()
            plan = shift_warm_start(plan, spec.N, l)
            stats = StepStats(
                outer_iterations=solution.outer_iterations if solution else 0,
                inner_iterations=solution.inner_iterations if solution else 0,
                max_violation=solution.max_violation if solution else float("inf"),
                status=solution.status if solution else SolveStatus.NUMERICAL_FAILURE,
                solve_time_s=elapsed,
            )

        x_next, y = step_plant(model, x, u_apply)
        err = y - refs[step]
        du = u_apply - u_prev
        stage = float(err @ spec.Q @ err + du @ spec.R @ du)

        trace.time.append(step)
        trace.x.append(x.copy())
        trace.u.append(u_apply)
        trace.y.append(y)
        trace.y_ref.append(refs[step].copy())
        trace.stage_cost.append(stage)
        trace.solver_stats.append(stats)

        x = x_next
        u_prev = u_apply

    trace.cumulative_cost = float(np.sum(trace.stage_cost))
    return trace


def rcso(trace: Trace, reference_trace: Trace) -> float:
    """Relative cumulative suboptimality |DR - DR_ref| / |DR_ref|."""
    if len(trace.time) != len(reference_trace.time):
        raise DimensionMismatchError(
            f"traces have different lengths: {len(trace.time)} vs {len(reference_trace.time)}"
        )
    dr_ref = reference_trace.cumulative_cost
    if dr_ref == 0.0:
        raise ZeroReferenceCostError("reference trace has zero cumulative cost")
    return abs(trace.cumulative_cost - dr_ref) / abs(dr_ref)


def write_trace_csv(trace: Trace, path) -> None:
    """Dump a trace as CSV, one row per step, 9 significant digits."""
    if not trace.time:
        raise ValueError("trace is empty")
    n = trace.x[0].shape[0]
    l = trace.u[0].shape[0]
    m = trace.y[0].shape[0]
    header = (
        ["step"]
        + [f"x{i + 1}" for i in range(n)]
        + [f"u{i + 1}" for i in range(l)]
        + [f"y{i + 1}" for i in range(m)]
        + [f"yref{i + 1}" for i in range(m)]
        + ["stage_cost", "outer_iters", "inner_iters", "max_violation", "status"]
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i, step in enumerate(trace.time):
            stats = trace.solver_stats[i]
            cells = [str(step)]
            cells += [_fmt(v) for v in trace.x[i]]
            cells += [_fmt(v) for v in trace.u[i]]
            cells += [_fmt(v) for v in trace.y[i]]
            cells += [_fmt(v) for v in trace.y_ref[i]]
            cells += [
                _fmt(trace.stage_cost[i]),
                str(stats.outer_iterations),
                str(stats.inner_iterations),
                _fmt(stats.max_violation),
                str(stats.status),
            ]
            fh.write(",".join(cells) + "\n")


def _fmt(value: float) -> str:
    return f"{float(value):.9g}"
