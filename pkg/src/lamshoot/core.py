"""Generating-curve model for O(m) x O(n)-invariant lambda-hypersurfaces.

A rotational hypersurface in R^{m+n} is encoded by a unit-speed profile
curve ``(x(t), y(t))`` in the open first quadrant with tangent angle
``theta``.  The curve generates a lambda-hypersurface exactly when

    x' = cos(theta)
    y' = sin(theta)
    theta' = (x/2 - (m-1)/x) sin(theta) + ((n-1)/y - y/2) cos(theta) + lambda

For m = n the same system is written in coordinates adapted to the
diagonal ``y = x``:  r = (x+y)/sqrt(2), s = (x-y)/sqrt(2), phi = theta + pi/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

SQRT2 = math.sqrt(2.0)
QUARTER_PI = 0.25 * math.pi

# RHS evaluation refuses states closer than this to a coordinate axis.
EPS_DOMAIN = 1e-9


class DomainError(ValueError):
    """State outside the open first quadrant (or too close to an axis)."""


class SpacingError(ValueError):
    """Finite-difference stencil is too far from uniform."""


@dataclass(frozen=True)
class Params:
    m: int
    n: int
    lam: float

    def __post_init__(self) -> None:
        if int(self.m) != self.m or self.m < 2:
            raise ValueError("m must be >= 2")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be >= 2")
        if not math.isfinite(self.lam):
            raise ValueError("lambda must be finite")
        if self.lam > 0:
            raise ValueError("lambda must be <= 0")

    @property
    def within_guarantees(self) -> bool:
        """False for lambda = 0 (self-shrinker comparison mode)."""
        return self.lam < 0

    @property
    def symmetric(self) -> bool:
        return self.m == self.n


@dataclass(frozen=True)
class ProfileState:
    x: float
    y: float
    theta: float


@dataclass(frozen=True)
class DiagonalState:
    r: float
    s: float
    phi: float


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    state: ProfileState
    theta_dot: float


@dataclass(frozen=True)
class CurvatureData:
    kappa_m: float
    kappa_n: float
    kappa_profile: float


@dataclass(frozen=True)
class ExplicitSolutions:
    line_y: float
    line_x: float
    circle_radius: float


# -- right-hand sides -------------------------------------------------------

def theta_dot(x: float, y: float, theta: float, m: int, n: int, lam: float) -> float:
    if x < EPS_DOMAIN or y < EPS_DOMAIN:
        raise DomainError(f"state ({x!r}, {y!r}) is on or beyond a coordinate axis")
    return (0.5 * x - (m - 1) / x) * math.sin(theta) + ((n - 1) / y - 0.5 * y) * math.cos(theta) + lam


def phi_dot(r: float, s: float, phi: float, n: int, lam: float) -> float:
    q = r * r - s * s
    # r - |s| is sqrt(2) * min(x, y)
    if r - abs(s) < SQRT2 * EPS_DOMAIN:
        raise DomainError(f"diagonal state (r={r!r}, s={s!r}) is on or beyond a coordinate axis")
    k = 2.0 * (n - 1) / q
    return (-0.5 * r + k * r) * math.cos(phi) + (0.5 * s + k * s) * math.sin(phi) + lam


def rhs_xy(state: ProfileState, params: Params) -> tuple[float, float, float]:
    x, y, th = state.x, state.y, state.theta
    return math.cos(th), math.sin(th), theta_dot(x, y, th, params.m, params.n, params.lam)


def rhs_diagonal(state: DiagonalState, params: Params) -> tuple[float, float, float]:
    if params.m != params.n:
        raise ValueError("the diagonal system requires m = n")
    r, s, ph = state.r, state.s, state.phi
    return math.sin(ph), math.cos(ph), phi_dot(r, s, ph, params.n, params.lam)


# -- coordinate changes -----------------------------------------------------

def to_diagonal(state: ProfileState) -> DiagonalState:
    if state.x <= 0 or state.y <= 0:
        raise DomainError("profile state must lie in the open first quadrant")
    return DiagonalState(
        (state.x + state.y) / SQRT2, (state.x - state.y) / SQRT2, state.theta + QUARTER_PI
    )


def from_diagonal(state: DiagonalState) -> ProfileState:
    x = (state.r + state.s) / SQRT2
    y = (state.r - state.s) / SQRT2
    if x <= 0 or y <= 0:
        raise DomainError("diagonal state maps outside the open first quadrant")
    return ProfileState(x, y, state.phi - QUARTER_PI)


# -- explicit solutions -----------------------------------------------------

def explicit_solutions(params: Params) -> ExplicitSolutions:
    """Closed forms of the horizontal line, vertical line and circle solutions.

    The horizontal line is traversed towards +x (theta = 0), the vertical
    line towards -y (theta = -pi/2) and the circle clockwise.  With any
    other orientation the lambda term has the wrong sign.
    """
    lam, m, n = params.lam, params.m, params.n
    return ExplicitSolutions(
        line_y=lam + math.sqrt(lam * lam + 2 * (n - 1)),
        line_x=lam + math.sqrt(lam * lam + 2 * (m - 1)),
        circle_radius=lam + math.sqrt(lam * lam + 2 * (m + n - 1)),
    )


def horizontal_line_state(params: Params, x: float) -> ProfileState:
    return ProfileState(x, explicit_solutions(params).line_y, 0.0)


def vertical_line_state(params: Params, y: float) -> ProfileState:
    return ProfileState(explicit_solutions(params).line_x, y, -0.5 * math.pi)


def circle_state(params: Params, alpha: float) -> ProfileState:
    """Point of the clockwise circle solution at polar angle ``alpha``."""
    rho = explicit_solutions(params).circle_radius
    return ProfileState(rho * math.cos(alpha), rho * math.sin(alpha), alpha - 0.5 * math.pi)


# -- curvature --------------------------------------------------------------

def curvatures(sample: TrajectorySample, params: Params) -> CurvatureData:
    x, y, th = sample.state.x, sample.state.y, sample.state.theta
    if x < EPS_DOMAIN or y < EPS_DOMAIN:
        raise DomainError("curvatures are undefined on a coordinate axis")
    return CurvatureData(math.sin(th) / x, -math.cos(th) / y, sample.theta_dot)


def curvature_identity_residual(sample: TrajectorySample, params: Params, sigma: float | None = None) -> float:
    """Mean-curvature balance of the hypersurface at ``sample``.

    (m-1) k_m + (n-1) k_n + k_profile - sigma/2 (x sin th - y cos th) - lambda
    """
    if sigma is None:
        sigma = ORIENTATION_SIGN
    c = curvatures(sample, params)
    x, y, th = sample.state.x, sample.state.y, sample.state.theta
    support = 0.5 * (x * math.sin(th) - y * math.cos(th))
    return (params.m - 1) * c.kappa_m + (params.n - 1) * c.kappa_n + c.kappa_profile - sigma * support - params.lam


def _calibrate_orientation() -> float:
    # Fix the sign of the support-function term from the explicit solutions.
    probe = Params(2, 3, -0.7)
    sol = explicit_solutions(probe)
    states = [
        horizontal_line_state(probe, 1.3),
        vertical_line_state(probe, 0.9),
        circle_state(probe, 0.4),
    ]
    thetadots = [0.0, 0.0, -1.0 / sol.circle_radius]
    best = None
    for sigma in (1.0, -1.0):
        worst = max(
            abs(curvature_identity_residual(TrajectorySample(0.0, st, td), probe, sigma))
            for st, td in zip(states, thetadots)
        )
        if worst < 1e-12:
            if best is not None:
                raise AssertionError("orientation calibration is ambiguous")
            best = sigma
    if best is None:
        raise AssertionError("no orientation sign makes the explicit solutions balance")
    return best


ORIENTATION_SIGN = _calibrate_orientation()


# -- finite-difference consistency ------------------------------------------

def theta_fd_residual(samples: Sequence[TrajectorySample], params: Params) -> float:
    """Three-point estimate of theta' minus the model theta' at the middle sample."""
    a, b, c = samples
    h1 = b.t - a.t
    h2 = c.t - b.t
    if h1 <= 0 or h2 <= 0 or abs(h2 - h1) > 0.1 * min(h1, h2):
        raise SpacingError(f"stencil spacings {h1!r}, {h2!r} are not within 10%")
    ta, tb, tc = a.state.theta, b.state.theta, c.state.theta
    # second-order accurate on non-uniform grids
    deriv = (-h2 / (h1 * (h1 + h2))) * ta + ((h2 - h1) / (h1 * h2)) * tb + (h1 / (h2 * (h1 + h2))) * tc
    st = b.state
    return deriv - theta_dot(st.x, st.y, st.theta, params.m, params.n, params.lam)
