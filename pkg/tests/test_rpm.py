import numpy as np
import pytest

from rpmqp.errors import NotDescentError
from rpmqp.problems import QPTEST_SOLUTION, qptest_problem, random_qp
from rpmqp.qp import QpProblem, SolveStatus, kkt_residual, objective, recover_multipliers
from rpmqp.reference import kkt_enumerate
from rpmqp.rpm import (
    BfgsState,
    RpmConfig,
    augmented_gradient,
    augmented_objective,
    backtracking_search,
    bfgs_direction,
    bfgs_solve,
    bfgs_update,
    penalty,
    rpm_solve,
)

from helpers import central_difference


def unconstrained(h, f):
    h = np.atleast_2d(np.array(h, dtype=float))
    return QpProblem(H=h, f=f, G=np.zeros((0, h.shape[0])), w=[])


# ---------------------------------------------------------------- penalty


def test_penalty_feasible_is_zero():
    assert penalty([-1.0, -0.5, 0.0], [3.0, 1.0, 7.0]) == 0.0


def test_penalty_single_violation():
    assert penalty([1.0, -1.0], [0.1, 0.1]) == pytest.approx(0.1)


def test_penalty_hand_arithmetic():
    assert penalty([2.0, 3.0], [1.0, 10.0]) == pytest.approx(94.0)


def test_augmented_objective_feasible_equals_objective():
    qp = qptest_problem()
    u = np.array([1.0, 1.0])
    gains = np.full(qp.q, 5.0)
    assert augmented_objective(qp, gains, u) == pytest.approx(objective(qp, u))


def test_augmented_objective_zero_gains():
    qp = qptest_problem()
    u = np.array([-3.0, 4.0])
    assert augmented_objective(qp, np.zeros(qp.q), u) == pytest.approx(objective(qp, u))


def test_augmented_objective_qptest_origin():
    # J(0,0) = 0 and the single violated row contributes 0.1 * 2^2 = 0.4
    qp = qptest_problem()
    gains = np.full(qp.q, 0.1)
    assert augmented_objective(qp, gains, np.zeros(2)) == pytest.approx(0.4)


def test_augmented_gradient_feasible():
    qp = qptest_problem()
    u = np.array([1.0, 1.0])
    gains = np.full(qp.q, 2.0)
    assert np.allclose(augmented_gradient(qp, gains, u), qp.H @ u + qp.f)


def test_augmented_gradient_zero_gains_matches_plain():
    qp = qptest_problem()
    u = np.array([-4.0, 9.0])
    assert np.allclose(augmented_gradient(qp, np.zeros(qp.q), u), qp.H @ u + qp.f)


def test_augmented_gradient_finite_differences_away_from_kinks():
    rng = np.random.default_rng(17)
    checked = 0
    while checked < 100:
        qp = random_qp(rng)
        gains = rng.uniform(0.1, 50.0, qp.q)
        u = rng.standard_normal(qp.n) * 2.0
        if np.min(np.abs(qp.G @ u - qp.w)) <= 1e-3:
            continue
        fd = central_difference(lambda v: augmented_objective(qp, gains, v), u)
        grad = augmented_gradient(qp, gains, u)
        assert np.max(np.abs(fd - grad)) <= 1e-5 * max(1.0, np.max(np.abs(grad)))
        checked += 1


# ------------------------------------------------------------- bfgs parts


def test_direction_steepest_descent():
    state = BfgsState(u=np.zeros(2), hinv=np.eye(2), grad=np.array([1.0, -2.0]))
    assert np.allclose(bfgs_direction(state), [-1.0, 2.0])


def test_direction_zero_gradient():
    state = BfgsState(u=np.zeros(2), hinv=np.eye(2), grad=np.zeros(2))
    assert np.allclose(bfgs_direction(state), 0.0)


def test_direction_exact_inverse_is_newton_step():
    rng = np.random.default_rng(2)
    qp = unconstrained([[3.0, 1.0], [1.0, 2.0]], rng.standard_normal(2))
    u = rng.standard_normal(2)
    state = BfgsState(u=u, hinv=np.linalg.inv(qp.H), grad=qp.H @ u + qp.f)
    u_min = np.linalg.solve(qp.H, -qp.f)
    assert np.allclose(u + bfgs_direction(state), u_min, atol=1e-12)


def test_backtracking_armijo_chain():
    # F(u) = u^2 from u=1 along p=-2: t=1 fails the Armijo test, t=0.5 lands
    # exactly on the minimizer and is accepted.
    qp = unconstrained([[2.0]], [0.0])
    t = backtracking_search(qp, np.zeros(0), np.array([1.0]), np.array([-2.0]),
                            np.array([2.0]), RpmConfig())
    assert t == pytest.approx(0.5)


def test_backtracking_rejects_non_descent():
    qp = unconstrained([[2.0]], [0.0])
    with pytest.raises(NotDescentError):
        backtracking_search(qp, np.zeros(0), np.array([1.0]), np.array([0.0]),
                            np.array([0.0]), RpmConfig())


def test_backtracking_full_newton_step_accepted():
    qp = unconstrained([[4.0, 0.0], [0.0, 1.0]], [1.0, -2.0])
    u = np.array([2.0, 2.0])
    grad = qp.H @ u + qp.f
    p = np.linalg.solve(qp.H, -grad)
    t = backtracking_search(qp, np.zeros(0), u, p, grad, RpmConfig())
    assert t == 1.0


def test_bfgs_update_skips_on_zero_step():
    hinv = np.eye(2)
    out = bfgs_update(hinv, np.zeros(2), np.array([1.0, 0.0]), 1e-12)
    assert np.array_equal(out, hinv)


def test_bfgs_update_identity_fixed_point():
    out = bfgs_update(np.eye(2), np.array([1.0, 0.0]), np.array([1.0, 0.0]), 1e-12)
    assert np.allclose(out, np.eye(2), atol=1e-14)


def test_bfgs_update_learns_inverse_hessian():
    # With exact line searches on a strictly convex quadratic, n BFGS steps
    # recover the exact inverse Hessian (and land on the minimizer).
    rng = np.random.default_rng(8)
    n = 5
    a = rng.standard_normal((n, n))
    h = a.T @ a + n * np.eye(n)
    f = rng.standard_normal(n)
    u = rng.standard_normal(n)
    hinv = np.eye(n)
    for _ in range(n):
        grad = h @ u + f
        p = hinv @ (-grad)
        t = -(grad @ p) / (p @ h @ p)
        s = t * p
        hinv = bfgs_update(hinv, s, h @ s, 1e-12)
        u = u + s
    assert np.max(np.abs(hinv @ h - np.eye(n))) <= 1e-6
    assert np.max(np.abs(h @ u + f)) <= 1e-9


# ------------------------------------------------------------- bfgs solve


def test_bfgs_solve_reaches_analytic_minimizer():
    qp = unconstrained(2.0 * np.eye(2), [-2.0, -4.0])
    res = bfgs_solve(qp, np.zeros(0), np.zeros(2), RpmConfig())
    assert np.max(np.abs(res.u - [1.0, 2.0])) <= 1e-6
    assert res.converged


def test_bfgs_solve_at_minimizer_stops_immediately():
    qp = unconstrained(2.0 * np.eye(2), [-2.0, -4.0])
    res = bfgs_solve(qp, np.zeros(0), np.array([1.0, 2.0]), RpmConfig())
    assert res.iterations <= 1
    assert res.converged
    assert np.allclose(res.u, [1.0, 2.0])


def test_bfgs_solve_large_gain_approaches_constrained_optimum():
    qp = qptest_problem()
    gains = np.full(qp.q, 1e6)
    res = bfgs_solve(qp, gains, np.zeros(2), RpmConfig(conv_tol=1e-9, max_inner=500))
    assert np.max(np.abs(res.u - np.array(QPTEST_SOLUTION))) <= 1e-3
    lam = recover_multipliers(qp, res.u, active_tol=1e-2)
    assert kkt_residual(qp, res.u, np.maximum(lam, 0.0)) <= 1e-2


def test_bfgs_descent_property():
    rng = np.random.default_rng(21)
    for _ in range(10):
        qp = random_qp(rng)
        gains = rng.uniform(0.1, 100.0, qp.q)
        res = bfgs_solve(qp, gains, rng.standard_normal(qp.n) * 3.0, RpmConfig())
        values = np.array(res.f_history)
        assert np.all(np.diff(values) <= 1e-12 * np.maximum(1.0, np.abs(values[:-1])))


# -------------------------------------------------------------- rpm solve


def test_rpm_qptest_from_infeasible_origin():
    qp = qptest_problem()
    sol = rpm_solve(qp, u0=np.zeros(2))
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(4.371875, abs=1e-4)
    assert np.max(np.abs(sol.u_star - np.array(QPTEST_SOLUTION))) <= 1e-3
    assert sol.max_violation <= 1e-6


def test_rpm_interior_optimum():
    # box |u_i| <= 10 is inactive at the optimum (1, 0); a penalty loop that
    # stopped at first feasibility would sit at the starting boundary instead.
    qp = QpProblem(
        H=2.0 * np.eye(2),
        f=[-2.0, 0.0],
        G=np.vstack([np.eye(2), -np.eye(2)]),
        w=10.0 * np.ones(4),
    )
    sol = rpm_solve(qp, u0=np.array([10.0, 10.0]))
    assert sol.status is SolveStatus.OPTIMAL
    assert np.max(np.abs(sol.u_star - [1.0, 0.0])) <= 1e-5


def test_rpm_deep_infeasible_start_agrees():
    qp = qptest_problem()
    near = rpm_solve(qp, u0=np.zeros(2))
    far = rpm_solve(qp, u0=np.array([-50.0, -50.0]))
    assert far.status is SolveStatus.OPTIMAL
    assert np.max(np.abs(far.u_star - near.u_star)) <= 1e-4


def test_rpm_gain_schedule_monotone_until_feasible():
    qp = qptest_problem()
    seen = []
    rpm_solve(qp, u0=np.array([-50.0, -50.0]), outer_callback=lambda i, k, v: seen.append((k, v)))
    gains = [k for k, _ in seen]
    feasible_at = next((i for i, (_, v) in enumerate(seen) if v <= 1e-6), len(seen))
    assert all(b >= a for a, b in zip(gains[:feasible_at], gains[1:feasible_at]))


def test_rpm_zero_penalty_equivalence():
    rng = np.random.default_rng(33)
    for _ in range(10):
        n = int(rng.integers(1, 9))
        a = rng.standard_normal((n, n))
        qp = unconstrained(a.T @ a + n * np.eye(n), rng.standard_normal(n))
        sol = rpm_solve(qp, u0=rng.standard_normal(n))
        expected = np.linalg.solve(qp.H, -qp.f)
        assert sol.status is SolveStatus.OPTIMAL
        assert np.max(np.abs(sol.u_star - expected)) <= 1e-6 * max(1.0, np.max(np.abs(expected)))


def test_rpm_initial_point_independence():
    # 50 problems, 5 starts each; run at a tight step tolerance so that the
    # comparison is sharper than the 1e-3 agreement being asserted.
    rng = np.random.default_rng(7)
    cfg = RpmConfig(conv_tol=1e-9)
    for _ in range(50):
        qp = random_qp(rng)
        reference_point = None
        for attempt in range(5):
            u0 = rng.standard_normal(qp.n) * (10.0 if attempt % 2 else 0.5)
            sol = rpm_solve(qp, cfg, u0=u0)
            assert sol.status is SolveStatus.OPTIMAL
            if reference_point is None:
                reference_point = sol.u_star
            else:
                assert np.max(np.abs(sol.u_star - reference_point)) <= 1e-3


def test_rpm_matches_oracle_on_small_corpus():
    rng = np.random.default_rng(4)
    cfg = RpmConfig(conv_tol=1e-9)
    for _ in range(25):
        qp = random_qp(rng)
        sol = rpm_solve(qp, cfg, u0=rng.standard_normal(qp.n) * 5.0)
        oracle = kkt_enumerate(qp)
        assert sol.status is SolveStatus.OPTIMAL
        assert abs(sol.objective - oracle.objective) <= max(1e-6, 1e-4 * abs(oracle.objective))


def test_rpm_optimal_solutions_satisfy_kkt():
    rng = np.random.default_rng(44)
    cfg = RpmConfig(conv_tol=1e-9)
    for _ in range(20):
        qp = random_qp(rng)
        sol = rpm_solve(qp, cfg, u0=rng.standard_normal(qp.n))
        assert sol.status is SolveStatus.OPTIMAL
        lam = recover_multipliers(qp, sol.u_star, active_tol=cfg.slack_tol * 100)
        assert kkt_residual(qp, sol.u_star, lam) <= 1e-4


def test_config_validation():
    with pytest.raises(ValueError):
        RpmConfig(slack_tol=0.0)
    with pytest.raises(ValueError):
        RpmConfig(k_growth=1.0)
    with pytest.raises(ValueError):
        RpmConfig(ls_shrink=1.0)
