"""Numerical integration with the constructed methods."""

from .experiments import (
    DefectScan,
    DriftFit,
    DriftFloorWarning,
    Trajectory,
    defect_scan,
    drift_fit,
    integrate,
    loglog_slope,
    secular_rate,
    symmetry_defect,
    symplectic_defect,
    working_kind,
)
from .jet import Jet
from .numeric import ConvergenceError, JacobianMode, SolverConfig, Strategy
from .problems import Problem, builtin_problems, get_problem
from .steppers import (
    MidpointProjection,
    RKStepper,
    SymmetricProjection,
    midpoint_ext_step,
    rk_step,
    symmetric_projection_step,
)

__all__ = [
    "ConvergenceError",
    "DefectScan",
    "DriftFit",
    "DriftFloorWarning",
    "JacobianMode",
    "Jet",
    "MidpointProjection",
    "Problem",
    "RKStepper",
    "SolverConfig",
    "Strategy",
    "SymmetricProjection",
    "Trajectory",
    "builtin_problems",
    "defect_scan",
    "drift_fit",
    "get_problem",
    "integrate",
    "loglog_slope",
    "midpoint_ext_step",
    "rk_step",
    "secular_rate",
    "symmetric_projection_step",
    "symmetry_defect",
    "symplectic_defect",
    "working_kind",
]
