"""Citation-aircraft case study: longitudinal dynamics and a tracking scenario.

The discrete-time model (sample time 0.5 s by default) covers the linearized
longitudinal dynamics of a citation aircraft flying at 5000 m and a constant
128.2 m/s.  The single input is the elevator angle in degrees.  Outputs are
taken row by row from the C matrix: row 0 selects the pitch angle, row 1 the
fourth state, row 2 the combination 128.2 * (x2 - x1).  (Published
descriptions of this example disagree on whether the fourth state is the
altitude or the altitude rate; the matrices below are stored verbatim and the
tracked output is row 1 regardless.)

Scenario constraints: elevator limited to +-15 deg, elevator slew to
+-30 deg/s (so +-30 * Ts per step), and the pitch angle kept within +-20 deg
for passenger comfort.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .mpc import LtiModel, MpcSpec
from .rpm import RpmConfig

ELEVATOR_LIMIT_DEG = 15.0
ELEVATOR_SLEW_DEG_PER_S = 30.0
PITCH_LIMIT_DEG = 20.0

# Output row indices of the C matrix.
PITCH_ROW = 0
ALTITUDE_ROW = 1

_A = (
    (0.240, 0.0, 0.1787, 0.0),
    (-0.372, 1.000, 0.270, 0.0),
    (-0.990, 0.0, 0.138, 0.0),
    (-48.935, 64.100, 2.399, 1.000),
)
_B = ((-1.234,), (-1.438,), (-4.482,), (-1.799,))
_C = (
    (0.0, 1.000, 0.0, 0.0),
    (0.0, 0.0, 0.0, 1.000),
    (-128.200, 128.200, 0.0, 0.0),
)
_D = ((0.0,), (0.0,), (0.0,))


def citation_model(ts: float = 0.5) -> LtiModel:
    """The citation aircraft longitudinal model with the given sample time."""
    return LtiModel(
        A=np.array(_A), B=np.array(_B), C=np.array(_C), D=np.array(_D), ts=ts
    )


@dataclass
class ScenarioConfig:
    """Closed-loop scenario settings (all overridable, JSON-loadable).

    altitude_ref is a piecewise-constant profile given as (start_step, value)
    breakpoints; the default is a single step to 400 m at t = 0.  Q holds the
    three output weights (diagonal), R the scalar move weight.
    """

    N: int = 10
    Ts: float = 0.5
    T_sim: int = 200
    altitude_ref: tuple = ((0, 400.0),)
    Q: tuple = (0.0, 1.0, 0.0)
    R: float = 10.0
    slack_tol: float = 1e-6
    conv_tol: float = 1e-6

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.T_sim < 1:
            raise ValueError("T_sim must be >= 1")
        if self.Ts <= 0:
            raise ValueError("Ts must be positive")
        if len(self.Q) != 3:
            raise ValueError("Q must list the three output weights")
        if any(w < 0 for w in self.Q):
            raise ValueError("Q weights must be >= 0")
        if self.R <= 0:
            raise ValueError("R must be positive")
        if not self.altitude_ref:
            raise ValueError("altitude_ref needs at least one (step, value) breakpoint")

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        if "altitude_ref" in data:
            data["altitude_ref"] = tuple((int(s), float(v)) for s, v in data["altitude_ref"])
        if "Q" in data:
            data["Q"] = tuple(float(v) for v in data["Q"])
        return cls(**data)

    def rpm_config(self) -> RpmConfig:
        # The condensed Hessian of this plant is badly conditioned (the
        # altitude channel integrates twice), so the BFGS core is started
        # from the Cholesky-based H^-1 instead of the identity.
        return RpmConfig(
            slack_tol=self.slack_tol, conv_tol=self.conv_tol, warm_hessian=True
        )


def reference_profile(cfg: ScenarioConfig) -> np.ndarray:
    """The (T_sim + N, 3) output reference: altitude profile on row 1, zeros elsewhere."""
    total = cfg.T_sim + cfg.N
    refs = np.zeros((total, 3))
    points = sorted((int(s), float(v)) for s, v in cfg.altitude_ref)
    for start, value in points:
        if start < total:
            refs[max(start, 0) :, ALTITUDE_ROW] = value
    return refs


def aircraft_scenario(cfg: ScenarioConfig | None = None):
    """Build (MpcSpec, x_init, y_ref trajectory) for the tracking scenario."""
    cfg = cfg or ScenarioConfig()
    model = citation_model(cfg.Ts)
    du_limit = ELEVATOR_SLEW_DEG_PER_S * cfg.Ts
    spec = MpcSpec(
        model=model,
        N=cfg.N,
        Q=np.diag(cfg.Q),
        R=np.array([[cfg.R]]),
        u_min=np.array([-ELEVATOR_LIMIT_DEG]),
        u_max=np.array([ELEVATOR_LIMIT_DEG]),
        du_min=np.array([-du_limit]),
        du_max=np.array([du_limit]),
        y_min=np.array([-PITCH_LIMIT_DEG, -np.inf, -np.inf]),
        y_max=np.array([PITCH_LIMIT_DEG, np.inf, np.inf]),
    )
    x_init = np.zeros(4)
    return spec, x_init, reference_profile(cfg)
