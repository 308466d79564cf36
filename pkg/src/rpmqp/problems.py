"""Benchmark problem builders shared by the CLI and the test-suite."""

from __future__ import annotations

import numpy as np

from .qp import QpProblem

# The qptest benchmark (Maros-Meszaros repository): minimize
#   0.5 (8 x^2 + 4 x y + 10 y^2) + 1.5 x - 2 y
# subject to 2x + y >= 2, -x + 2y <= 6, 0 <= x <= 20, y >= 0.
# Known optimum, excluding the problem's additive constant: 4.371875 at
# (0.7625, 0.475), with multiplier 4.275 on the first row.
QPTEST_OPTIMAL_VALUE = 4.371875
QPTEST_SOLUTION = (0.7625, 0.475)


def qptest_problem() -> QpProblem:
    """The qptest benchmark in G U <= w form (>= rows and bounds negated)."""
    return QpProblem(
        H=np.array([[8.0, 2.0], [2.0, 10.0]]),
        f=np.array([1.5, -2.0]),
        G=np.array(
            [
                [-2.0, -1.0],  # 2x + y >= 2
                [-1.0, 2.0],   # -x + 2y <= 6
                [-1.0, 0.0],   # x >= 0
                [1.0, 0.0],    # x <= 20
                [0.0, -1.0],   # y >= 0
            ]
        ),
        w=np.array([-2.0, 6.0, 0.0, 20.0, 0.0]),
    )


def random_qp(rng: np.random.Generator, n_max: int = 8, q_max: int = 16) -> QpProblem:
    """Random strictly convex QP, feasible by construction.

    H = A'A + n I keeps the Hessian well conditioned; w = G u_c + slack with
    positive slack guarantees an interior point.  Depending on f the optimum
    lands on the boundary or strictly inside, which is exactly the mix the
    penalty solver needs to be exercised on.
    """
    n = int(rng.integers(1, n_max + 1))
    q = int(rng.integers(1, q_max + 1))
    a = rng.standard_normal((n, n))
    h = a.T @ a + n * np.eye(n)
    f = 2.0 * rng.standard_normal(n)
    g = rng.standard_normal((q, n))
    center = rng.standard_normal(n)
    slack = rng.uniform(0.1, 1.0, q)
    return QpProblem(H=h, f=f, G=g, w=g @ center + slack)
