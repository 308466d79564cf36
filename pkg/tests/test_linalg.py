import numpy as np
import pytest

from rpmqp.errors import DimensionMismatchError, NotPositiveDefiniteError
from rpmqp.linalg import (
    as_vector,
    backward_substitute,
    cholesky_factor,
    cholesky_solve,
    forward_substitute,
    mat_vec,
)

from helpers import random_spd


def test_cholesky_diagonal():
    lower = cholesky_factor([[4.0, 0.0], [0.0, 9.0]])
    assert np.allclose(lower, [[2.0, 0.0], [0.0, 3.0]])


def test_cholesky_identity():
    assert np.allclose(cholesky_factor(np.eye(3)), np.eye(3))


def test_cholesky_reconstruction():
    m = np.array([[4.0, 2.0], [2.0, 3.0]])
    lower = cholesky_factor(m)
    assert np.max(np.abs(lower @ lower.T - m)) <= 1e-12
    assert np.allclose(np.triu(lower, 1), 0.0)


def test_cholesky_indefinite_raises():
    with pytest.raises(NotPositiveDefiniteError):
        cholesky_factor([[0.0, 1.0], [1.0, 0.0]])


def test_cholesky_rejects_asymmetric():
    with pytest.raises(DimensionMismatchError):
        cholesky_factor([[1.0, 0.5], [0.0, 1.0]])


def test_cholesky_solve_identity():
    x = cholesky_solve(np.eye(2), [3.0, 5.0])
    assert np.allclose(x, [3.0, 5.0])


def test_cholesky_solve_diagonal():
    x = cholesky_solve([[2.0, 0.0], [0.0, 3.0]], [4.0, 9.0])
    assert np.allclose(x, [1.0, 1.0])


def test_cholesky_solve_2x2_against_analytic_inverse():
    # inverse of [[4,2],[2,3]] is [[3,-2],[-2,4]] / 8, so x = (0.375, -0.25)
    m = np.array([[4.0, 2.0], [2.0, 3.0]])
    x = cholesky_solve(cholesky_factor(m), [1.0, 0.0])
    assert np.allclose(x, [0.375, -0.25], atol=1e-12)


def test_substitution_round_trip():
    lower = cholesky_factor(np.array([[9.0, 3.0], [3.0, 5.0]]))
    b = np.array([1.0, 2.0])
    y = forward_substitute(lower, b)
    assert np.allclose(lower @ y, b)
    x = backward_substitute(lower, y)
    assert np.allclose(lower.T @ x, y)


def test_mat_vec_examples():
    assert np.allclose(mat_vec(np.eye(2), [7.0, -1.0]), [7.0, -1.0])
    assert np.allclose(mat_vec(np.zeros((2, 2)), [1.0, 1.0]), [0.0, 0.0])
    assert np.allclose(mat_vec([[1.0, 2.0], [3.0, 4.0]], [1.0, 1.0]), [3.0, 7.0])


def test_mat_vec_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        mat_vec(np.eye(2), [1.0, 2.0, 3.0])


def test_vector_rejects_nan():
    with pytest.raises(ValueError):
        as_vector([1.0, float("nan")])


def test_spd_corpus_factor_and_solve():
    # 500 random SPD matrices: factorization succeeds, reconstruction and
    # solve accuracy stay well inside their budgets.
    rng = np.random.default_rng(1234)
    for _ in range(500):
        n = int(rng.integers(1, 21))
        m = random_spd(rng, n)
        lower = cholesky_factor(m)
        scale = np.max(np.abs(m))
        assert np.max(np.abs(lower @ lower.T - m)) <= 1e-9 * scale
        x_true = rng.standard_normal(n)
        x = cholesky_solve(lower, m @ x_true)
        assert np.max(np.abs(x - x_true)) <= 1e-7 * max(1.0, np.max(np.abs(x_true)))


def test_operations_do_not_mutate_inputs():
    m = np.array([[4.0, 2.0], [2.0, 3.0]])
    b = np.array([1.0, 2.0])
    m_copy = m.copy()
    b_copy = b.copy()
    lower = cholesky_factor(m)
    cholesky_solve(lower, b)
    mat_vec(m, b)
    assert np.array_equal(m, m_copy)
    assert np.array_equal(b, b_copy)
