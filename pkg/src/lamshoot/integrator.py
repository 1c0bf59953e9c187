"""Adaptive Dormand-Prince 5(4) integration of the profile-curve system.

Events are located on the 4th-order continuous extension by bisection;
predicates receive a :class:`PhasePoint` carrying both coordinate systems so
they can be written independently of the system being integrated.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence, Union

from .core import (
    QUARTER_PI,
    SQRT2,
    DiagonalState,
    DomainError,
    Params,
    ProfileState,
    TrajectorySample,
    from_diagonal,
    phi_dot,
    theta_dot,
    to_diagonal,
)

H_MIN = 1e-14


class IntegrationError(RuntimeError):
    pass


class DomainCollapse(IntegrationError):
    """Every admissible step leaves the open first quadrant."""


class NoProgress(IntegrationError):
    """Step size underflow."""


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.1
    event_tol: float = 1e-12
    t_max: float = 100.0
    y_stop: float = 1e-6
    x_stop: float = 1e-6
    s_arm: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("rel_tol", "abs_tol", "max_step", "event_tol", "t_max", "y_stop", "x_stop", "s_arm"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite number")
        from .core import EPS_DOMAIN

        if self.y_stop < EPS_DOMAIN or self.x_stop < EPS_DOMAIN:
            raise ValueError(f"y_stop and x_stop must be >= {EPS_DOMAIN}")

    def scaled(self, factor: float) -> "IntegratorConfig":
        """Copy with rel_tol and abs_tol multiplied by ``factor``."""
        from dataclasses import replace

        return replace(self, rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor)


class EventKind(enum.Enum):
    # declaration order is the tie-break priority for simultaneous terminal events
    LINE_CROSS = "LineCross"
    ANGLE_CEILING = "AngleCeiling"
    ANGLE_FLOOR = "AngleFloor"
    CRITICAL_ANGLE = "CriticalAngle"
    THETA_ZERO = "ThetaZero"
    X_AXIS_GUARD = "XAxisGuard"
    Y_AXIS_GUARD = "YAxisGuard"
    STEP_LIMIT = "StepLimit"

    @property
    def priority(self) -> int:
        return _PRIORITY[self]


_PRIORITY = {kind: i for i, kind in enumerate(EventKind)}


class PhasePoint(NamedTuple):
    t: float
    x: float
    y: float
    theta: float
    r: float
    s: float
    phi: float


Predicate = Callable[[PhasePoint], float]


@dataclass(frozen=True)
class EventSpec:
    kind: EventKind
    predicate: Predicate
    direction: str = "either"  # rising | falling | either
    terminal: bool = False
    arm: Optional[Callable[[PhasePoint], bool]] = None

    def __post_init__(self) -> None:
        if self.direction not in ("rising", "falling", "either"):
            raise ValueError(f"bad event direction {self.direction!r}")


@dataclass(frozen=True)
class Event:
    t: float
    kind: EventKind
    state: ProfileState
    theta_dot: float
    terminal: bool
    simultaneous: tuple[EventKind, ...] = ()


def standard_event(kind: EventKind, config: IntegratorConfig) -> EventSpec:
    """The stock predicate for ``kind``; StepLimit is implicit in ``t_max``."""
    if kind is EventKind.LINE_CROSS:
        s_arm = config.s_arm
        return EventSpec(kind, lambda p: p.s, "falling", True, arm=lambda p: p.s >= s_arm)
    if kind is EventKind.ANGLE_CEILING:
        return EventSpec(kind, lambda p: p.phi, "rising", True)
    if kind is EventKind.ANGLE_FLOOR:
        return EventSpec(kind, lambda p: p.phi + math.pi, "falling", True)
    if kind is EventKind.CRITICAL_ANGLE:
        return EventSpec(kind, lambda p: p.phi + 0.5 * math.pi, "either", False)
    if kind is EventKind.THETA_ZERO:
        return EventSpec(kind, lambda p: math.sin(p.theta), "either", False)
    if kind is EventKind.X_AXIS_GUARD:
        y_stop = config.y_stop
        return EventSpec(kind, lambda p: p.y - y_stop, "falling", True)
    if kind is EventKind.Y_AXIS_GUARD:
        x_stop = config.x_stop
        return EventSpec(kind, lambda p: p.x - x_stop, "falling", True)
    raise ValueError(f"{kind} has no stock predicate")


def standard_events(kinds: Sequence[EventKind], config: IntegratorConfig) -> list[EventSpec]:
    return [standard_event(k, config) for k in kinds if k is not EventKind.STEP_LIMIT]


# -- coordinate systems -----------------------------------------------------

class _System:
    """Vector field plus conversions for one coordinate chart."""

    diagonal: bool

    def __init__(self, params: Params, diagonal: bool) -> None:
        self.m, self.n, self.lam = params.m, params.n, params.lam
        self.diagonal = diagonal

    def f(self, u: tuple[float, float, float]) -> tuple[float, float, float]:
        a, b, c = u
        if self.diagonal:
            return math.sin(c), math.cos(c), phi_dot(a, b, c, self.n, self.lam)
        return math.cos(c), math.sin(c), theta_dot(a, b, c, self.m, self.n, self.lam)

    def axis_distance(self, u: tuple[float, float, float]) -> float:
        if self.diagonal:
            return (u[0] - abs(u[1])) / SQRT2
        return min(u[0], u[1])

    def point(self, t: float, u: tuple[float, float, float]) -> PhasePoint:
        a, b, c = u
        if self.diagonal:
            return PhasePoint(t, (a + b) / SQRT2, (a - b) / SQRT2, c - QUARTER_PI, a, b, c)
        return PhasePoint(t, a, b, c, (a + b) / SQRT2, (a - b) / SQRT2, c + QUARTER_PI)

    def profile(self, u: tuple[float, float, float]) -> ProfileState:
        if self.diagonal:
            return ProfileState((u[0] + u[1]) / SQRT2, (u[0] - u[1]) / SQRT2, u[2] - QUARTER_PI)
        return ProfileState(*u)


# -- Dormand-Prince tableau -------------------------------------------------

_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (  # 5th-order minus embedded 4th-order weights
    35 / 384 - 5179 / 57600,
    0.0,
    500 / 1113 - 7571 / 16695,
    125 / 192 - 393 / 640,
    -2187 / 6784 + 92097 / 339200,
    11 / 84 - 187 / 2100,
    -1 / 40,
)
# Shampine's free 4th-order continuous extension: row j gives the coefficients
# of sigma, sigma^2, sigma^3, sigma^4 multiplying stage j.
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)


class OutOfSpan(ValueError):
    pass


@dataclass(frozen=True)
class _Step:
    t0: float
    h: float
    u0: tuple[float, float, float]
    u1: tuple[float, float, float]
    q: tuple[tuple[float, float, float, float], ...]

    def __call__(self, t: float) -> tuple[float, float, float]:
        if t == self.t0:
            return self.u0
        if t == self.t0 + self.h:
            return self.u1
        sig = (t - self.t0) / self.h
        h = self.h
        return tuple(
            u + h * sig * (q0 + sig * (q1 + sig * (q2 + sig * q3)))
            for u, (q0, q1, q2, q3) in zip(self.u0, self.q)
        )


@dataclass(frozen=True)
class DenseOutput:
    """Piecewise continuous extension over the accepted steps."""

    steps: tuple[_Step, ...]
    diagonal: bool

    @property
    def t_start(self) -> float:
        return self.steps[0].t0 if self.steps else 0.0

    @property
    def t_end(self) -> float:
        if not self.steps:
            return 0.0
        last = self.steps[-1]
        return last.t0 + last.h

    def native(self, t: float) -> tuple[float, float, float]:
        if not self.steps or t < self.t_start or t > self.t_end:
            raise OutOfSpan(f"t={t!r} outside [{self.t_start!r}, {self.t_end!r}]")
        i = max(bisect.bisect_right(self._starts, t) - 1, 0)
        return self.steps[i](t)

    @property
    def _starts(self) -> list[float]:
        cached = self.__dict__.get("_starts_cache")
        if cached is None:
            cached = [s.t0 for s in self.steps]
            object.__setattr__(self, "_starts_cache", cached)
        return cached

    def __call__(self, t: float) -> ProfileState:
        u = self.native(t)
        if self.diagonal:
            return ProfileState((u[0] + u[1]) / SQRT2, (u[0] - u[1]) / SQRT2, u[2] - QUARTER_PI)
        return ProfileState(*u)


def dense_eval(dense: DenseOutput, t: float) -> ProfileState:
    return dense(t)


@dataclass(frozen=True)
class Trajectory:
    params: Params
    samples: tuple[TrajectorySample, ...]
    events: tuple[Event, ...]
    dense: Optional[DenseOutput] = field(default=None, repr=False, compare=False)

    @property
    def t_end(self) -> float:
        return self.samples[-1].t

    @property
    def terminal(self) -> Optional[Event]:
        if self.events and self.events[-1].terminal:
            return self.events[-1]
        return None

    def events_of(self, kind: EventKind) -> list[Event]:
        return [e for e in self.events if e.kind is kind]

    def sample_at(self, t: float) -> TrajectorySample:
        if self.dense is None:
            raise OutOfSpan("trajectory carries no dense output")
        st = self.dense(t)
        p = self.params
        return TrajectorySample(t, st, theta_dot(st.x, st.y, st.theta, p.m, p.n, p.lam))

    def resample(self, spacing: float) -> list[TrajectorySample]:
        """Samples at uniform arclength, endpoints included, spacing <= ``spacing``."""
        t0, t1 = self.samples[0].t, self.t_end
        count = max(int(math.ceil((t1 - t0) / spacing - 1e-9)), 1)
        out = [self.samples[0]]
        for i in range(1, count):
            out.append(self.sample_at(t0 + (t1 - t0) * i / count))
        out.append(self.samples[-1])
        return out


def _crossed(direction: str, g0: float, g1: float) -> bool:
    if direction == "rising":
        return g0 < 0.0 <= g1
    if direction == "falling":
        return g0 > 0.0 >= g1
    return (g0 < 0.0 <= g1) or (g0 > 0.0 >= g1)


def integrate(
    initial: Union[ProfileState, DiagonalState],
    params: Params,
    config: IntegratorConfig = IntegratorConfig(),
    events: Sequence[EventSpec] = (),
    diagonal: Optional[bool] = None,
) -> Trajectory:
    """Integrate from ``initial`` until the first terminal event or ``t_max``.

    The diagonal chart is used when m = n unless ``diagonal`` says otherwise.
    """
    if diagonal is None:
        diagonal = params.m == params.n
    if diagonal and params.m != params.n:
        raise ValueError("the diagonal system requires m = n")
    system = _System(params, diagonal)
    if diagonal:
        d = initial if isinstance(initial, DiagonalState) else to_diagonal(initial)
        u: tuple[float, float, float] = (d.r, d.s, d.phi)
    else:
        pst = initial if isinstance(initial, ProfileState) else from_diagonal(initial)
        u = (pst.x, pst.y, pst.theta)
    if system.axis_distance(u) <= 0:
        raise DomainError("initial state is not in the open first quadrant")

    f = system.f
    rtol, atol = config.rel_tol, config.abs_tol
    t_max = config.t_max
    t = 0.0
    k1 = f(u)
    samples = [TrajectorySample(0.0, system.profile(u), k1[2])]
    steps: list[_Step] = []
    recorded: list[Event] = []

    p0 = system.point(0.0, u)
    g_prev = [spec.predicate(p0) for spec in events]
    armed = [spec.arm is None or spec.arm(p0) for spec in events]

    h = min(1e-3, config.max_step)
    while True:
        cap = min(config.max_step, 0.25 * system.axis_distance(u))
        h = min(h, cap)
        final = False
        if t + h >= t_max:
            h = t_max - t
            final = True
        try:
            ks = [k1]
            for i in range(1, 7):
                row = _A[i]
                ui = tuple(
                    u[c] + h * sum(a * ks[j][c] for j, a in enumerate(row)) for c in range(3)
                )
                ks.append(f(ui))
            # ui from the last stage is the 5th-order solution (FSAL)
            u_new = ui
        except DomainError:
            h *= 0.25
            if h < H_MIN:
                raise DomainCollapse(f"cannot step away from t={t!r} without leaving the quadrant")
            continue
        err = 0.0
        for c in range(3):
            e = h * sum(_E[j] * ks[j][c] for j in range(7))
            sc = atol + rtol * max(abs(u[c]), abs(u_new[c]))
            err += (e / sc) ** 2
        err = math.sqrt(err / 3.0)
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < H_MIN:
                raise NoProgress(f"step size underflow at t={t!r}")
            continue

        q = tuple(
            tuple(sum(_P[j][k] * ks[j][c] for j in range(7)) for k in range(4)) for c in range(3)
        )
        step = _Step(t, h, u, u_new, q)
        steps.append(step)
        t_new = t + h if not final else t_max

        # event detection on the accepted step
        p_new = system.point(t_new, u_new)
        g_new = [spec.predicate(p_new) for spec in events]
        hits: list[tuple[float, int]] = []
        for i, spec in enumerate(events):
            if armed[i] and _crossed(spec.direction, g_prev[i], g_new[i]):
                hits.append((_locate(spec, step, system, t, t_new, g_prev[i], config.event_tol), i))
        hits.sort(key=lambda hit: (hit[0], events[hit[1]].kind.priority))

        term_t = None
        for te, i in hits:
            if events[i].terminal:
                term_t = te
                break
        if term_t is not None:
            group = [i for te, i in hits if events[i].terminal and te <= term_t + config.event_tol]
            group.sort(key=lambda i: events[i].kind.priority)
            for te, i in hits:
                if not events[i].terminal and te <= term_t:
                    recorded.append(_make_event(te, events[i], step, system, params))
            chosen = events[group[0]]
            others = tuple(events[i].kind for i in group[1:])
            u_t = step(term_t)
            st = system.profile(u_t)
            td = f(u_t)[2]
            if term_t > samples[-1].t:
                samples.append(TrajectorySample(term_t, st, td))
            recorded.append(Event(term_t, chosen.kind, st, td, True, others))
            _truncate_last(steps, term_t)
            break
        for te, i in hits:
            recorded.append(_make_event(te, events[i], step, system, params))

        k7 = ks[6]
        samples.append(TrajectorySample(t_new, system.profile(u_new), k7[2]))
        t, u, k1 = t_new, u_new, k7
        g_prev = g_new
        for i, spec in enumerate(events):
            if not armed[i] and spec.arm(p_new):
                armed[i] = True

        if final:
            st = samples[-1]
            recorded.append(Event(t, EventKind.STEP_LIMIT, st.state, st.theta_dot, True))
            break
        if err == 0.0:
            h *= 5.0
        else:
            h *= min(5.0, max(0.2, 0.9 * err ** -0.2))

    return Trajectory(params, tuple(samples), tuple(recorded), DenseOutput(tuple(steps), diagonal))


def _locate(
    spec: EventSpec, step: _Step, system: _System, ta: float, tb: float, ga: float, tol: float
) -> float:
    """Bisect on the interpolant; returns the first time past the sign change."""
    lo, hi = ta, tb
    sign_lo = ga > 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        g = spec.predicate(system.point(mid, step(mid)))
        if g == 0.0 or (g > 0.0) != sign_lo:
            hi = mid
        else:
            lo = mid
    return hi


def _make_event(te: float, spec: EventSpec, step: _Step, system: _System, params: Params) -> Event:
    u = step(te)
    return Event(te, spec.kind, system.profile(u), system.f(u)[2], spec.terminal)


def _truncate_last(steps: list[_Step], t_end: float) -> None:
    # The last step stays polynomial-identical, only its span shrinks so that
    # dense output ends exactly at the terminal event.
    last = steps[-1]
    h_new = t_end - last.t0
    if h_new <= 0:
        steps.pop()
        return
    sig = h_new / last.h
    # rescale coefficients: u0 + H*sig'*(..) with H=h_new reproduces the old polynomial
    q = tuple(
        (q0, q1 * sig, q2 * sig * sig, q3 * sig ** 3) for (q0, q1, q2, q3) in last.q
    )
    steps[-1] = _Step(last.t0, h_new, last.u0, last(t_end), q)
