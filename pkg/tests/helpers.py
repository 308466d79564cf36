"""Shared test utilities: finite-difference oracles and problem corpora."""

import numpy as np


def central_difference(fun, u, step=1e-6):
    """Central finite-difference gradient of a scalar function."""
    u = np.asarray(u, dtype=float)
    grad = np.zeros_like(u)
    for i in range(u.shape[0]):
        up = u.copy()
        down = u.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (fun(up) - fun(down)) / (2.0 * step)
    return grad


def random_spd(rng, n):
    """Well-conditioned SPD matrix A'A + n I."""
    a = rng.standard_normal((n, n))
    return a.T @ a + n * np.eye(n)


def relative_error(actual, expected):
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    scale = max(1.0, float(np.max(np.abs(expected))))
    return float(np.max(np.abs(actual - expected))) / scale
