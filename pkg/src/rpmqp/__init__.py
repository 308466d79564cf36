"""Dense convex QP solving via a robust hinge-squared penalty method.

The package bundles the penalty/BFGS solver, two independent baselines
(a primal active-set method and an exhaustive KKT oracle), a condensed
linear-MPC layer with a receding-horizon simulator, the citation-aircraft
case study, and a benchmark CLI.
"""

from .aircraft import ScenarioConfig, aircraft_scenario, citation_model
from .errors import (
    DimensionMismatchError,
    InfeasibleStartError,
    LineSearchError,
    NoFeasiblePointError,
    NotDescentError,
    NotPositiveDefiniteError,
    NumericalFailureError,
    SolverError,
    TooManyConstraintsError,
    ZeroReferenceCostError,
)
from .mpc import (
    LtiModel,
    MpcSpec,
    Trace,
    closed_loop_simulate,
    condense,
    predict_matrices,
    rcso,
    shift_warm_start,
    step_plant,
    write_trace_csv,
)
from .qp import (
    QpProblem,
    QpSolution,
    SolveStatus,
    constraint_values,
    kkt_residual,
    max_violation,
    objective,
    objective_gradient,
    recover_multipliers,
)
from .reference import active_set_solve, find_feasible_point, kkt_enumerate
from .rpm import (
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

__all__ = [
    "DimensionMismatchError",
    "InfeasibleStartError",
    "LineSearchError",
    "LtiModel",
    "MpcSpec",
    "NoFeasiblePointError",
    "NotDescentError",
    "NotPositiveDefiniteError",
    "NumericalFailureError",
    "QpProblem",
    "QpSolution",
    "RpmConfig",
    "ScenarioConfig",
    "SolveStatus",
    "SolverError",
    "TooManyConstraintsError",
    "Trace",
    "ZeroReferenceCostError",
    "active_set_solve",
    "aircraft_scenario",
    "augmented_gradient",
    "augmented_objective",
    "backtracking_search",
    "bfgs_direction",
    "bfgs_solve",
    "bfgs_update",
    "citation_model",
    "closed_loop_simulate",
    "condense",
    "constraint_values",
    "find_feasible_point",
    "kkt_enumerate",
    "kkt_residual",
    "max_violation",
    "objective",
    "objective_gradient",
    "penalty",
    "predict_matrices",
    "rcso",
    "recover_multipliers",
    "rpm_solve",
    "shift_warm_start",
    "step_plant",
    "write_trace_csv",
]

__version__ = "0.1.0"
