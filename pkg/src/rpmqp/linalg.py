"""Minimal dense linear-algebra kernels used by the solvers.

Vectors are 1-D float64 numpy arrays, matrices are 2-D row-major float64
arrays.  Every problem handled here is small and dense (a few hundred rows at
the very most), so the Cholesky factorization is written out directly: the
positive-definiteness test needs an explicit pivot threshold, which LAPACK
wrappers do not expose.  All functions return fresh arrays and never mutate
their inputs.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, NotPositiveDefiniteError

# Pivot floor, relative to the largest diagonal entry of the input matrix.
PIVOT_RTOL = 1e-14
# Allowed relative asymmetry for matrices passed to cholesky_factor.
SYMMETRY_RTOL = 1e-12


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array (always a fresh copy)."""
    arr = np.array(v, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array (always a fresh copy)."""
    arr = np.array(m, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def mat_vec(m, v) -> np.ndarray:
    """Matrix-vector product M @ v with explicit dimension checking."""
    m = as_matrix(m)
    v = as_vector(v)
    if m.shape[1] != v.shape[0]:
        raise DimensionMismatchError(
            f"cannot multiply {m.shape} matrix by length-{v.shape[0]} vector"
        )
    return m @ v


def cholesky_factor(m) -> np.ndarray:
    """Lower-triangular L with M = L @ L.T for symmetric positive definite M.

    Raises NotPositiveDefiniteError as soon as a pivot drops to or below
    PIVOT_RTOL times the largest diagonal entry, which is the signal that the
    Hessian handed to a solver is ill-posed.
    """
    a = as_matrix(m)
    n, cols = a.shape
    if n != cols:
        raise DimensionMismatchError(f"matrix must be square, got {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if a.size and np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * max(scale, 1e-300):
        raise DimensionMismatchError("matrix is not symmetric")

    threshold = PIVOT_RTOL * max(np.max(np.diagonal(a)), 0.0) if n else 0.0
    lower = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= threshold:
            raise NotPositiveDefiniteError(
                f"pivot {pivot:.3e} at column {j} is below the positive-definite floor"
            )
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def forward_substitute(lower: np.ndarray, b) -> np.ndarray:
    """Solve L @ y = b for lower-triangular L."""
    b = as_vector(b)
    n = lower.shape[0]
    if b.shape[0] != n:
        raise DimensionMismatchError(f"rhs length {b.shape[0]} does not match matrix size {n}")
    y = np.zeros(n)
    for i in range(n):
        y[i] = (b[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    return y


def backward_substitute(lower: np.ndarray, y) -> np.ndarray:
    """Solve L.T @ x = y for lower-triangular L."""
    y = as_vector(y)
    n = lower.shape[0]
    if y.shape[0] != n:
        raise DimensionMismatchError(f"rhs length {y.shape[0]} does not match matrix size {n}")
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - lower[i + 1 :, i] @ x[i + 1 :]) / lower[i, i]
    return x


def cholesky_solve(lower, b) -> np.ndarray:
    """Solve (L @ L.T) @ x = b given the Cholesky factor L.

    Forward substitution followed by backward substitution; together with
    cholesky_factor this is the only linear-system machinery the solvers need.
    """
    lower = as_matrix(lower)
    if lower.shape[0] != lower.shape[1]:
        raise DimensionMismatchError(f"factor must be square, got {lower.shape}")
    return backward_substitute(lower, forward_substitute(lower, b))


def cholesky_solve_matrix(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise cholesky_solve for a 2-D right-hand side."""
    out = np.zeros((lower.shape[0], b.shape[1]))
    for j in range(b.shape[1]):
        out[:, j] = backward_substitute(lower, forward_substitute(lower, b[:, j]))
    return out
