"""Numerical construction of closed O(m) x O(n)-invariant lambda-hypersurfaces.

The profile curve of such a hypersurface solves a planar ODE.  For m = n the
package shoots from the diagonal, bisects for the critical starting radius
and closes the resulting arc by reflection.
"""

from __future__ import annotations

from .analysis import LemmaId, LemmaReport, Violation, run_all
from .core import (
    CurvatureData,
    DiagonalState,
    DomainError,
    ExplicitSolutions,
    Params,
    ProfileState,
    SpacingError,
    TrajectorySample,
    curvature_identity_residual,
    curvatures,
    theta_fd_residual,
    explicit_solutions,
    from_diagonal,
    rhs_diagonal,
    rhs_xy,
    to_diagonal,
)
from .integrator import (
    DenseOutput,
    Event,
    EventKind,
    EventSpec,
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    dense_eval,
    integrate,
)
from .shooting import (
    BracketFailure,
    ClosedCurve,
    Outcome,
    ShotResult,
    ShotSpec,
    SweepRow,
    ToleranceNotMet,
    find_rstar,
    reflect_and_close,
    shoot,
    sweep,
)

__all__ = [
    "BracketFailure",
    "ClosedCurve",
    "CurvatureData",
    "DenseOutput",
    "DiagonalState",
    "DomainError",
    "Event",
    "EventKind",
    "EventSpec",
    "ExplicitSolutions",
    "IntegrationError",
    "IntegratorConfig",
    "LemmaId",
    "LemmaReport",
    "Outcome",
    "Params",
    "ProfileState",
    "ShotResult",
    "ShotSpec",
    "SpacingError",
    "SweepRow",
    "ToleranceNotMet",
    "Trajectory",
    "TrajectorySample",
    "Violation",
    "curvature_identity_residual",
    "curvatures",
    "dense_eval",
    "theta_fd_residual",
    "explicit_solutions",
    "find_rstar",
    "from_diagonal",
    "integrate",
    "reflect_and_close",
    "rhs_diagonal",
    "rhs_xy",
    "run_all",
    "shoot",
    "sweep",
    "to_diagonal",
]
