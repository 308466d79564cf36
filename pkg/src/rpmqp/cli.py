"""Benchmark command line: qptest, the aircraft closed loop, random-QP audits.

Every command is deterministic for a fixed seed and flag set; wall-time
columns are informational only and never enter an audit.  Exit code 0 means
every run ended optimal and every audit passed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .aircraft import ScenarioConfig, aircraft_scenario
from .errors import SolverError
from .mpc import SolveStatus, closed_loop_simulate, rcso, write_trace_csv
from .problems import QPTEST_OPTIMAL_VALUE, qptest_problem, random_qp
from .qp import QpProblem, QpSolution, max_violation
from .reference import active_set_solve, find_feasible_point, kkt_enumerate
from .rpm import RpmConfig, rpm_solve

QPTEST_OBJECTIVE_TOL = 1e-4
CONSTRAINT_AUDIT_TOL = 1e-6


@dataclass
class RunReport:
    """One solver run on one problem, serializable as a CSV row or JSON object."""

    solver: str
    problem: str
    objective: float
    status: str
    outer_iterations: int
    inner_iterations: int
    wall_time_s: float
    max_violation: float

    CSV_HEADER = (
        "solver,problem,objective,status,outer_iterations,"
        "inner_iterations,wall_time_s,max_violation"
    )

    def to_csv_row(self) -> str:
        return ",".join(
            [
                self.solver,
                self.problem,
                _fmt(self.objective),
                self.status,
                str(self.outer_iterations),
                str(self.inner_iterations),
                _fmt(self.wall_time_s),
                _fmt(self.max_violation),
            ]
        )

    def to_json_dict(self) -> dict:
        return asdict(self)


def solve_with(solver: str, qp: QpProblem, config: RpmConfig | None = None) -> QpSolution:
    """Dispatch a single QP to rpm, asm, or the enumeration oracle."""
    if solver == "rpm":
        return rpm_solve(qp, config)
    if solver == "asm":
        return active_set_solve(qp, find_feasible_point(qp))
    if solver == "oracle":
        return kkt_enumerate(qp)
    raise ValueError(f"unknown solver '{solver}'")


def run_qptest(solver: str = "rpm", config: RpmConfig | None = None, problem_name: str = "qptest") -> RunReport:
    """Run one solver on the qptest benchmark."""
    qp = qptest_problem()
    started = time.perf_counter()
    solution = solve_with(solver, qp, config)
    elapsed = time.perf_counter() - started
    return RunReport(
        solver=solver,
        problem=problem_name,
        objective=solution.objective,
        status=str(solution.status),
        outer_iterations=solution.outer_iterations,
        inner_iterations=solution.inner_iterations,
        wall_time_s=elapsed,
        max_violation=solution.max_violation,
    )


def run_aircraft(
    solvers=("rpm", "asm"),
    cfg: ScenarioConfig | None = None,
    out_dir=None,
):
    """Closed-loop aircraft runs; returns traces, per-solver summaries, RCSO.

    When out_dir is given, writes one trace CSV per solver, a summary CSV
    with average solve time and iterations per step, and an rcso.csv table
    for the solvers measured against the asm baseline.
    """
    cfg = cfg or ScenarioConfig()
    spec, x_init, refs = aircraft_scenario(cfg)
    traces = {}
    for solver in solvers:
        traces[solver] = closed_loop_simulate(
            spec, solver, x_init, np.zeros(1), refs, cfg.T_sim, rpm_config=cfg.rpm_config()
        )

    summaries = {}
    for solver, trace in traces.items():
        stats = trace.solver_stats
        summaries[solver] = {
            "solver": solver,
            "steps": len(trace.time),
            "cumulative_cost": trace.cumulative_cost,
            "mean_solve_time_s": float(np.mean([s.solve_time_s for s in stats])),
            "mean_outer_iterations": float(np.mean([s.outer_iterations for s in stats])),
            "mean_inner_iterations": float(np.mean([s.inner_iterations for s in stats])),
            "max_violation": float(np.max([s.max_violation for s in stats])),
            "non_optimal_steps": int(
                sum(1 for s in stats if s.status is not SolveStatus.OPTIMAL)
            ),
        }

    rcso_rows = {}
    if "asm" in traces:
        for solver, trace in traces.items():
            if solver != "asm":
                rcso_rows[solver] = rcso(trace, traces["asm"])

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for solver, trace in traces.items():
            write_trace_csv(trace, out / f"aircraft_trace_{solver}.csv")
        with open(out / "aircraft_summary.csv", "w", encoding="utf-8", newline="\n") as fh:
            keys = [
                "solver", "steps", "cumulative_cost", "mean_solve_time_s",
                "mean_outer_iterations", "mean_inner_iterations",
                "max_violation", "non_optimal_steps",
            ]
            fh.write(",".join(keys) + "\n")
            for solver in solvers:
                row = summaries[solver]
                fh.write(",".join(_fmt_cell(row[k]) for k in keys) + "\n")
        with open(out / "rcso.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("solver,baseline,horizon,rcso\n")
            for solver, value in rcso_rows.items():
                fh.write(f"{solver},asm,{cfg.N},{_fmt(value)}\n")

    return traces, summaries, rcso_rows


def run_random_suite(
    count: int,
    seed: int,
    n_max: int = 8,
    q_max: int = 16,
    config: RpmConfig | None = None,
) -> dict:
    """Batch check of rpm against the enumeration oracle on seeded problems.

    Unless overridden, the solver runs at a tighter step tolerance (1e-9)
    than the package default: near an active constraint the quasi-Newton
    steps shrink with the penalty gain, so matching the oracle at its own
    precision needs the smaller stop.  The summary carries the per-instance
    objective and solution gaps plus the failure count; it contains no
    timing fields, so a fixed seed reproduces it byte for byte.
    """
    config = config or RpmConfig(conv_tol=1e-9)
    rng = np.random.default_rng(seed)
    instances = []
    failures = 0
    for index in range(count):
        qp = random_qp(rng, n_max=n_max, q_max=q_max)
        start = rng.standard_normal(qp.n) * 5.0
        oracle = kkt_enumerate(qp)
        try:
            solution = rpm_solve(qp, config, u0=start)
            objective_gap = abs(solution.objective - oracle.objective)
            solution_gap = float(np.max(np.abs(solution.u_star - oracle.u_star)))
            ok = (
                solution.status is SolveStatus.OPTIMAL
                and objective_gap <= max(1e-6, 1e-4 * abs(oracle.objective))
            )
        except SolverError:
            objective_gap = float("inf")
            solution_gap = float("inf")
            ok = False
        if not ok:
            failures += 1
        instances.append(
            {
                "index": index,
                "n": qp.n,
                "q": qp.q,
                "objective_gap": objective_gap,
                "solution_gap": solution_gap,
                "ok": ok,
            }
        )
    gaps = [inst["objective_gap"] for inst in instances]
    sol_gaps = [inst["solution_gap"] for inst in instances]
    return {
        "count": count,
        "seed": seed,
        "n_max": n_max,
        "q_max": q_max,
        "max_objective_gap": max(gaps) if gaps else 0.0,
        "max_solution_gap": max(sol_gaps) if sol_gaps else 0.0,
        "failures": failures,
        "instances": instances,
    }


def render_random_summary(summary: dict) -> str:
    """Deterministic text form of a random-suite summary."""
    lines = [
        f"count={summary['count']} seed={summary['seed']} "
        f"n_max={summary['n_max']} q_max={summary['q_max']}",
        f"max_objective_gap={_fmt(summary['max_objective_gap'])}",
        f"max_solution_gap={_fmt(summary['max_solution_gap'])}",
        f"failures={summary['failures']}",
    ]
    return "\n".join(lines) + "\n"


def _fmt(value: float) -> str:
    return f"{float(value):.9g}"


def _fmt_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return _fmt(value)


def _rpm_config_from_args(args) -> RpmConfig:
    kwargs = {}
    if getattr(args, "slack_tol", None) is not None:
        kwargs["slack_tol"] = args.slack_tol
    if getattr(args, "conv_tol", None) is not None:
        kwargs["conv_tol"] = args.conv_tol
    return RpmConfig(**kwargs)


def _cmd_qptest(args) -> int:
    solvers = ["rpm", "asm", "oracle"] if args.solver == "all" else [args.solver]
    config = _rpm_config_from_args(args)
    reports = [run_qptest(s, config) for s in solvers]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "qptest.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(RunReport.CSV_HEADER + "\n")
        for report in reports:
            fh.write(report.to_csv_row() + "\n")
    ok = True
    for report in reports:
        passed = (
            report.status == str(SolveStatus.OPTIMAL)
            and abs(report.objective - QPTEST_OPTIMAL_VALUE) <= QPTEST_OBJECTIVE_TOL
        )
        ok = ok and passed
        print(
            f"qptest {report.solver}: objective={_fmt(report.objective)} "
            f"status={report.status} [{'ok' if passed else 'FAIL'}]"
        )
    return 0 if ok else 1


def _cmd_aircraft(args) -> int:
    if args.scenario:
        cfg = ScenarioConfig.from_json(args.scenario)
    else:
        cfg = ScenarioConfig()
    overrides = {}
    if args.horizon is not None:
        overrides["N"] = args.horizon
    if args.tsim is not None:
        overrides["T_sim"] = args.tsim
    if overrides:
        data = asdict(cfg)
        data.update(overrides)
        data["altitude_ref"] = tuple(tuple(p) for p in data["altitude_ref"])
        data["Q"] = tuple(data["Q"])
        cfg = ScenarioConfig(**data)

    solvers = ("rpm", "asm") if args.solver == "all" else (args.solver,)
    if "asm" not in solvers:
        solvers = tuple(solvers) + ("asm",)  # rcso needs the baseline
    traces, summaries, rcso_rows = run_aircraft(solvers, cfg, out_dir=args.out)

    ok = True
    for solver, summary in summaries.items():
        non_optimal = summary["non_optimal_steps"]
        ok = ok and non_optimal == 0
        print(
            f"aircraft {solver}: cost={_fmt(summary['cumulative_cost'])} "
            f"mean_time={_fmt(summary['mean_solve_time_s'])}s "
            f"non_optimal_steps={non_optimal}"
        )
    audit_ok = _audit_aircraft_traces(traces, cfg)
    ok = ok and audit_ok
    for solver, value in rcso_rows.items():
        print(f"rcso {solver} vs asm (N={cfg.N}): {_fmt(value)}")
    print(f"constraint audit: {'ok' if audit_ok else 'FAIL'}")
    return 0 if ok else 1


def _audit_aircraft_traces(traces, cfg: ScenarioConfig) -> bool:
    from .aircraft import (
        ELEVATOR_LIMIT_DEG,
        ELEVATOR_SLEW_DEG_PER_S,
        PITCH_LIMIT_DEG,
        PITCH_ROW,
    )

    du_limit = ELEVATOR_SLEW_DEG_PER_S * cfg.Ts
    ok = True
    for trace in traces.values():
        u_prev = 0.0
        for i in range(len(trace.time)):
            u = float(trace.u[i][0])
            pitch = float(trace.y[i][PITCH_ROW])
            if abs(u) > ELEVATOR_LIMIT_DEG + CONSTRAINT_AUDIT_TOL:
                ok = False
            if abs(u - u_prev) > du_limit + CONSTRAINT_AUDIT_TOL:
                ok = False
            if abs(pitch) > PITCH_LIMIT_DEG + CONSTRAINT_AUDIT_TOL:
                ok = False
            u_prev = u
    return ok


def _cmd_random(args) -> int:
    config = RpmConfig(
        slack_tol=args.slack_tol if args.slack_tol is not None else 1e-6,
        conv_tol=args.conv_tol if args.conv_tol is not None else 1e-9,
    )
    summary = run_random_suite(
        args.count, args.seed, n_max=args.nmax, q_max=args.qmax, config=config
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "random_summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    sys.stdout.write(render_random_summary(summary))
    return 0 if summary["failures"] == 0 else 1


def _cmd_solve(args) -> int:
    qp = QpProblem.load_json(args.problem)
    config = _rpm_config_from_args(args)
    started = time.perf_counter()
    solution = solve_with(args.solver, qp, config)
    elapsed = time.perf_counter() - started
    report = RunReport(
        solver=args.solver,
        problem=Path(args.problem).stem,
        objective=solution.objective,
        status=str(solution.status),
        outer_iterations=solution.outer_iterations,
        inner_iterations=solution.inner_iterations,
        wall_time_s=elapsed,
        max_violation=max_violation(qp, solution.u_star),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"solve_{report.problem}.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"solve {report.problem} [{report.solver}]: objective={_fmt(report.objective)} "
        f"status={report.status} u*={[round(v, 9) for v in solution.u_star]}"
    )
    return 0 if report.status == str(SolveStatus.OPTIMAL) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpmqp",
        description="Benchmarks for the penalty-method QP solver and its MPC layer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_qptest = sub.add_parser("qptest", help="run the qptest benchmark")
    p_qptest.add_argument("--solver", choices=["rpm", "asm", "oracle", "all"], default="all")
    p_qptest.add_argument("--slack-tol", type=float, dest="slack_tol")
    p_qptest.add_argument("--conv-tol", type=float, dest="conv_tol")
    p_qptest.add_argument("--out", default="./results")
    p_qptest.set_defaults(func=_cmd_qptest)

    p_air = sub.add_parser("aircraft", help="closed-loop aircraft benchmark")
    p_air.add_argument("--horizon", type=int, default=None)
    p_air.add_argument("--tsim", type=int, default=None)
    p_air.add_argument("--scenario", default=None, help="scenario JSON file")
    p_air.add_argument("--solver", choices=["rpm", "asm", "all"], default="all")
    p_air.add_argument("--out", default="./results")
    p_air.set_defaults(func=_cmd_aircraft)

    p_rand = sub.add_parser("random", help="random-QP validation suite")
    p_rand.add_argument("--count", type=int, default=200)
    p_rand.add_argument("--seed", type=int, default=42)
    p_rand.add_argument("--nmax", type=int, default=8)
    p_rand.add_argument("--qmax", type=int, default=16)
    p_rand.add_argument("--slack-tol", type=float, dest="slack_tol")
    p_rand.add_argument("--conv-tol", type=float, dest="conv_tol")
    p_rand.add_argument("--out", default="./results")
    p_rand.set_defaults(func=_cmd_random)

    p_solve = sub.add_parser("solve", help="solve a QP from a JSON file")
    p_solve.add_argument("--problem", required=True)
    p_solve.add_argument("--solver", choices=["rpm", "asm", "oracle"], default="rpm")
    p_solve.add_argument("--slack-tol", type=float, dest="slack_tol")
    p_solve.add_argument("--conv-tol", type=float, dest="conv_tol")
    p_solve.add_argument("--out", default="./results")
    p_solve.set_defaults(func=_cmd_solve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def main_entry() -> None:
    sys.exit(main())
