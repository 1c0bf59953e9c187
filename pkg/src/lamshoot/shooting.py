"""Shooting from the diagonal for a closed generating curve (m = n).

A shot starts on the diagonal at distance ``R`` from the origin, heading
perpendicularly into the region below it, and runs until it returns to the
diagonal, turns back to phi = 0 or phi = -pi, or falls onto the x-axis.  The
critical radius is the infimum of radii whose shots all return; its shot
meets the diagonal at a right angle and closes up after reflection.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .core import (
    DiagonalState,
    Params,
    ProfileState,
    SpacingError,
    TrajectorySample,
    theta_fd_residual,
    explicit_solutions,
    from_diagonal,
    phi_dot,
    to_diagonal,
)
from .integrator import (
    Event,
    EventKind,
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    integrate,
    standard_events,
)

log = logging.getLogger(__name__)

SHOT_EVENTS = (
    EventKind.LINE_CROSS,
    EventKind.ANGLE_CEILING,
    EventKind.ANGLE_FLOOR,
    EventKind.CRITICAL_ANGLE,
    EventKind.THETA_ZERO,
    EventKind.X_AXIS_GUARD,
)

BRACKET_CAP = 1e6
# unwrapped angle offset of the reflected, reversed arc: theta -> -theta - 5pi/2
_REFLECT_SHIFT = -2.5 * math.pi


class ShootingError(RuntimeError):
    pass


class BracketFailure(ShootingError):
    pass


class ToleranceNotMet(ShootingError):
    def __init__(self, message: str, curve: "ClosedCurve") -> None:
        super().__init__(message)
        self.curve = curve


class Outcome(enum.Enum):
    RETURNS_TO_LINE = "ReturnsToLine"
    ANGLE_FLOOR = "AngleFloor"
    ANGLE_CEILING = "AngleCeiling"
    HITS_X_AXIS = "HitsXAxis"
    STEP_LIMIT = "StepLimit"


_OUTCOME_OF = {
    EventKind.LINE_CROSS: Outcome.RETURNS_TO_LINE,
    EventKind.ANGLE_FLOOR: Outcome.ANGLE_FLOOR,
    EventKind.ANGLE_CEILING: Outcome.ANGLE_CEILING,
    EventKind.X_AXIS_GUARD: Outcome.HITS_X_AXIS,
    EventKind.STEP_LIMIT: Outcome.STEP_LIMIT,
}


@dataclass(frozen=True)
class ShotSpec:
    R: float
    params: Params
    config: IntegratorConfig = IntegratorConfig()

    def __post_init__(self) -> None:
        if not (self.R > 0 and math.isfinite(self.R)):
            raise ValueError("R must be positive")
        if self.params.m != self.params.n:
            raise ValueError("shooting requires m = n")


@dataclass(frozen=True)
class ShotResult:
    R: float
    outcome: Outcome
    T: float
    terminal: DiagonalState
    s_max: Optional[float]
    r_at_smax: Optional[float]
    trajectory: Trajectory = field(repr=False, compare=False)

    @property
    def returns(self) -> bool:
        return self.outcome is Outcome.RETURNS_TO_LINE


@dataclass(frozen=True)
class ClosedCurve:
    r_star: float
    samples: tuple[TrajectorySample, ...]
    closure_gap: float
    perp_residual: float
    max_eq_residual: float
    bracket: tuple[float, float]
    iterations: int
    forward_count: int
    # closest approach (to x-axis, y-axis, origin) over returning bisection shots
    min_clearance: tuple[float, float, float] = (math.nan, math.nan, math.nan)
    shot: Optional[ShotResult] = field(default=None, repr=False, compare=False)

    @property
    def points(self) -> list[ProfileState]:
        return [s.state for s in self.samples]


def shoot(spec: ShotSpec) -> ShotResult:
    p = spec.params
    start = DiagonalState(spec.R, 0.0, 0.0)
    rate = phi_dot(spec.R, 0.0, 0.0, p.n, p.lam)
    if rate >= 0:
        # curls counter-clockwise (or not at all) at once: phi = 0 is already the ceiling
        st = from_diagonal(start)
        traj = Trajectory(
            p,
            (TrajectorySample(0.0, st, rate),),
            (Event(0.0, EventKind.ANGLE_CEILING, st, rate, True),),
        )
        return ShotResult(spec.R, Outcome.ANGLE_CEILING, 0.0, start, None, None, traj)

    traj = integrate(start, p, spec.config, standard_events(SHOT_EVENTS, spec.config), diagonal=True)
    term = traj.terminal
    outcome = _OUTCOME_OF[term.kind]
    crit = traj.events_of(EventKind.CRITICAL_ANGLE)
    s_max = r_at = None
    if crit:
        d = to_diagonal(crit[0].state)
        s_max, r_at = d.s, d.r
    return ShotResult(spec.R, outcome, term.t, to_diagonal(term.state), s_max, r_at, traj)


def _reflect(sample: TrajectorySample, t: float) -> TrajectorySample:
    st = sample.state
    return TrajectorySample(t, ProfileState(st.y, st.x, _REFLECT_SHIFT - st.theta), sample.theta_dot)


def reflect_and_close(
    shot: ShotResult,
    spacing: Optional[float] = None,
    *,
    r_star: Optional[float] = None,
    bracket: tuple[float, float] = (math.nan, math.nan),
    iterations: int = 0,
) -> ClosedCurve:
    """Close a returning shot by its mirror image across the diagonal.

    The mirrored arc is traversed backwards, so the loop keeps a single
    (clockwise) orientation and the unwrapped angle drops by 2 pi overall.
    With ``spacing`` the forward arc is first resampled at uniform arclength.
    """
    if not shot.returns:
        raise ValueError("only a shot that returns to the diagonal can be closed")
    traj = shot.trajectory
    forward = traj.resample(spacing) if spacing is not None else list(traj.samples)
    T = forward[-1].t
    mirrored = [_reflect(s, 2 * T - s.t) for s in reversed(forward)]

    def gap(a: TrajectorySample, b: TrajectorySample) -> float:
        return math.hypot(a.state.x - b.state.x, a.state.y - b.state.y)

    closure_gap = max(gap(forward[-1], mirrored[0]), gap(forward[0], mirrored[-1]))
    loop = forward + mirrored[1:-1]

    residuals = []
    for i in range(1, len(loop) - 1):
        try:
            residuals.append(abs(theta_fd_residual(loop[i - 1 : i + 2], traj.params)))
        except SpacingError:
            continue
    max_res = max(residuals) if residuals else math.nan

    return ClosedCurve(
        r_star=shot.R if r_star is None else r_star,
        samples=tuple(loop),
        closure_gap=closure_gap,
        perp_residual=abs(shot.terminal.phi + math.pi),
        max_eq_residual=max_res,
        bracket=bracket,
        iterations=iterations,
        forward_count=len(forward),
        shot=shot,
    )


def find_rstar(
    params: Params,
    config: IntegratorConfig = IntegratorConfig(),
    r_tol: float = 1e-10,
    max_iter: int = 200,
    *,
    perp_tol: float = 1e-6,
    spacing: float = 1e-3,
) -> ClosedCurve:
    """Bisect on "the shot returns to the diagonal" for the critical radius.

    The bracket starts at the circle radius (whose shot lands on the x-axis)
    and an upper radius found by doubling.  The curve is assembled from the
    returning shot at the top of the final bracket.
    """
    if params.m != params.n:
        raise ValueError("shooting requires m = n")
    if not params.within_guarantees:
        raise ValueError("lemma guarantees require lambda < 0")
    if not r_tol > 0:
        raise ValueError("r_tol must be positive")

    rho = explicit_solutions(params).circle_radius
    clearance = [math.inf, math.inf, math.inf]

    def fire(R: float) -> ShotResult:
        shot = shoot(ShotSpec(R, params, config))
        if shot.returns:
            for smp in shot.trajectory.samples:
                st = smp.state
                clearance[0] = min(clearance[0], st.y)
                clearance[1] = min(clearance[1], st.x)
                clearance[2] = min(clearance[2], math.hypot(st.x, st.y))
        return shot

    lo = rho
    hi = 2 * rho
    best = fire(hi)
    while not best.returns:
        lo = hi
        hi *= 2
        if hi > BRACKET_CAP * rho:
            raise BracketFailure(f"no returning shot below R = {BRACKET_CAP * rho:g}")
        best = fire(hi)

    iterations = 0
    stalled = False
    while hi - lo >= r_tol and iterations < max_iter:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            stalled = True
            break
        iterations += 1
        shot = fire(mid)
        if shot.returns:
            hi, best = mid, shot
        else:
            lo = mid
    log.debug("bisection finished after %d steps: [%r, %r]", iterations, lo, hi)

    curve = reflect_and_close(best, spacing, r_star=hi, bracket=(lo, hi), iterations=iterations)
    curve = replace(curve, min_clearance=tuple(clearance))
    if hi - lo >= r_tol:
        why = "floating-point resolution" if stalled else f"{max_iter} iterations"
        raise ToleranceNotMet(f"bracket width {hi - lo:.3g} >= r_tol after {why}", curve)
    if not curve.perp_residual <= perp_tol:
        raise ToleranceNotMet(f"perpendicularity residual {curve.perp_residual:.3g} > {perp_tol:g}", curve)
    return curve


@dataclass(frozen=True)
class SweepRow:
    R: float
    outcome: Optional[Outcome]
    phi_end: float
    s_max: Optional[float]
    T: float
    error: Optional[str] = None


def _sweep_one(args: tuple[float, Params, IntegratorConfig]) -> SweepRow:
    R, params, config = args
    try:
        res = shoot(ShotSpec(R, params, config))
    except (IntegrationError, ValueError) as exc:
        return SweepRow(R, None, math.nan, None, math.nan, f"{type(exc).__name__}: {exc}")
    return SweepRow(R, res.outcome, res.terminal.phi, res.s_max, res.T)


def sweep(
    params: Params,
    config: IntegratorConfig,
    R_values: Sequence[float],
    max_workers: Optional[int] = None,
) -> list[SweepRow]:
    """One summary row per radius, in input order; failures are captured per row."""
    if params.m != params.n:
        raise ValueError("shooting requires m = n")
    jobs = [(float(R), params, config) for R in R_values]
    if max_workers and max_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(job) for job in jobs]


def transitions(rows: Sequence[SweepRow]) -> int:
    """Number of returning/non-returning switches along a sweep."""
    flags = [r.outcome is Outcome.RETURNS_TO_LINE for r in rows if r.outcome is not None]
    return sum(a != b for a, b in zip(flags, flags[1:]))
