"""Exception types shared across the solver stack."""


class SolverError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatchError(SolverError, ValueError):
    """Operands have incompatible shapes."""


class NotPositiveDefiniteError(SolverError):
    """A matrix required to be positive definite failed its pivot test."""


class NotDescentError(SolverError):
    """Line search was handed a direction with nonnegative directional derivative."""


class LineSearchError(SolverError):
    """Backtracking exhausted its trial budget without sufficient decrease."""


class NumericalFailureError(SolverError):
    """An iterative solve broke down. Carries the last iterate when available."""

    def __init__(self, message, u=None, f_value=None, iterations=0):
        super().__init__(message)
        self.u = u
        self.f_value = f_value
        self.iterations = iterations


class TooManyConstraintsError(SolverError):
    """KKT enumeration is exponential in the constraint count and is capped."""


class NoFeasiblePointError(SolverError):
    """Exhaustive enumeration found no feasible KKT candidate."""


class InfeasibleStartError(SolverError):
    """The active-set method requires a feasible starting point."""


class ZeroReferenceCostError(SolverError):
    """Relative suboptimality is undefined when the reference trace has zero cost."""
