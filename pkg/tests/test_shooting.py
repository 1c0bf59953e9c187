from __future__ import annotations

import math

import pytest

from lamshoot import (
    BracketFailure,
    EventKind,
    IntegratorConfig,
    Outcome,
    Params,
    ProfileState,
    ShotSpec,
    ToleranceNotMet,
    Trajectory,
    TrajectorySample,
    find_rstar,
    reflect_and_close,
    shoot,
    sweep,
    to_diagonal,
)
from lamshoot import shooting
from lamshoot.integrator import Event
from lamshoot.shooting import ShotResult, _reflect, transitions

from oracles import RSTAR_2_2_HALF, scipy_rstar


# -- single shots -----------------------------------------------------------------

def test_circle_shot_lands_on_the_axis(params22):
    res = shoot(ShotSpec(2.0, params22))
    assert res.outcome is Outcome.HITS_X_AXIS
    term = res.trajectory.terminal.state
    assert abs(term.theta + 0.5 * math.pi) < 0.01


def test_large_shot_returns_to_the_line(params22):
    res = shoot(ShotSpec(8.0, params22))
    assert res.outcome is Outcome.RETURNS_TO_LINE
    assert -math.pi < res.terminal.phi < -0.5 * math.pi
    assert abs(res.terminal.s) < 1e-10
    assert 0 < res.s_max < 10 / 8.0


def test_counter_clockwise_start_is_an_immediate_ceiling(params22):
    res = shoot(ShotSpec(0.5, params22))
    assert res.outcome is Outcome.ANGLE_CEILING
    assert res.T == 0.0
    assert len(res.trajectory.samples) == 1


@pytest.mark.parametrize("R", [0.0, -1.0, math.inf, math.nan])
def test_shot_spec_rejects_bad_radii(R, params22):
    with pytest.raises(ValueError, match="R must be positive"):
        ShotSpec(R, params22)


def test_shot_spec_requires_equal_dimensions():
    with pytest.raises(ValueError, match="shooting requires m = n"):
        ShotSpec(3.0, Params(3, 2, -1.0))


def test_returning_shots_stay_below_the_line(params22):
    for R in (3.1, 4.0, 6.0, 10.0):
        res = shoot(ShotSpec(R, params22))
        assert res.returns
        assert -math.pi < res.terminal.phi < 0
        interior = res.trajectory.samples[1:-1]
        assert all(to_diagonal(s.state).s > 0 for s in interior)


def test_angle_floor_shots_end_at_minus_pi_above_the_line(params22):
    res = shoot(ShotSpec(2.5, params22))
    assert res.outcome is Outcome.ANGLE_FLOOR
    assert res.terminal.phi == pytest.approx(-math.pi, abs=1e-9)
    assert res.terminal.s > 0


# -- critical radius ----------------------------------------------------------------

def test_rstar_matches_independent_oracle(curve22):
    assert curve22.r_star == pytest.approx(RSTAR_2_2_HALF, abs=1e-9)


@pytest.mark.parametrize("n, lam", [(3, -1.0)])
def test_rstar_matches_oracle_computed_live(n, lam):
    assert find_rstar(Params(n, n, lam)).r_star == pytest.approx(scipy_rstar(n, lam), abs=1e-9)


def test_rstar_quality_metrics(curve22):
    lo, hi = curve22.bracket
    assert 2.0 < curve22.r_star == hi
    assert hi - lo < 1e-10
    assert curve22.perp_residual < 1e-6
    assert curve22.closure_gap < 1e-6
    assert curve22.max_eq_residual < 1e-4


def test_rstar_is_stable_under_tolerance_halving(params22, curve22):
    finer = find_rstar(params22, IntegratorConfig().scaled(0.5))
    assert abs(finer.r_star - curve22.r_star) < 1e-8


def test_bracket_sides_are_monotone(params22, curve22):
    r = curve22.r_star
    for R in (r + 1e-6, r + 1e-3, r + 0.1, r + 1.0, 2 * r):
        assert shoot(ShotSpec(R, params22)).returns
    for R in (2.0 + 1e-3, 2.3, 2.7, r - 1e-3, r - 1e-6):
        assert not shoot(ShotSpec(R, params22)).returns


def test_rstar_depends_smoothly_on_lambda():
    a = find_rstar(Params(2, 2, -0.01)).r_star
    b = find_rstar(Params(2, 2, -0.02)).r_star
    assert abs(a - b) <= 10 * 0.01 * a


def test_find_rstar_validates_its_inputs():
    with pytest.raises(ValueError, match="shooting requires m = n"):
        find_rstar(Params(3, 2, -1.0))
    with pytest.raises(ValueError, match="lambda < 0"):
        find_rstar(Params(2, 2, 0.0))


def test_unreachable_tolerance_reports_the_best_curve(params22):
    with pytest.raises(ToleranceNotMet) as info:
        find_rstar(params22, r_tol=1e-30)
    curve = info.value.curve
    assert curve.r_star == pytest.approx(RSTAR_2_2_HALF, abs=1e-9)
    assert curve.perp_residual < 1e-6


def test_bracket_failure_when_nothing_returns(params22, monkeypatch):
    real = shooting.shoot

    def never_returns(spec):
        res = real(ShotSpec(2.0, spec.params, spec.config))
        return ShotResult(spec.R, Outcome.HITS_X_AXIS, res.T, res.terminal, None, None, res.trajectory)

    monkeypatch.setattr(shooting, "shoot", never_returns)
    with pytest.raises(BracketFailure):
        find_rstar(params22)


def test_min_clearance_is_reported(curve22):
    y_min, x_min, origin = curve22.min_clearance
    assert y_min > 0 and x_min > 0
    # |p| >= x and |p| >= y at every sample
    assert origin >= max(y_min, x_min)


# -- closing the curve -------------------------------------------------------------

def test_toy_perpendicular_return_closes_exactly(params22):
    a = TrajectorySample(0.0, ProfileState(1.0, 1.0, -0.25 * math.pi), 0.0)
    b = TrajectorySample(2.0, ProfileState(2.0, 2.0, -1.25 * math.pi), 0.0)
    term = Event(2.0, EventKind.LINE_CROSS, b.state, 0.0, True)
    shot = ShotResult(
        math.sqrt(2), Outcome.RETURNS_TO_LINE, 2.0, to_diagonal(b.state), None, None,
        Trajectory(params22, (a, b), (term,)),
    )
    curve = reflect_and_close(shot)
    assert curve.closure_gap == 0.0
    assert curve.perp_residual == 0.0


def test_non_returning_shot_cannot_be_closed(params22):
    with pytest.raises(ValueError):
        reflect_and_close(shoot(ShotSpec(2.0, params22)))


def test_loop_count_drops_the_duplicated_endpoints(curve22):
    assert len(curve22.samples) == 2 * curve22.forward_count - 2


def test_loop_is_symmetric_across_the_diagonal(curve22):
    pts = curve22.points
    N = curve22.forward_count
    for i in range(1, N - 1):
        fwd, mir = pts[i], pts[2 * N - 2 - i]
        assert (fwd.x, fwd.y) == (mir.y, mir.x)


def test_loop_is_consistently_oriented(curve22):
    ts = [s.t for s in curve22.samples]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    thetas = [s.state.theta for s in curve22.samples]
    # one clockwise turn in total, up to the gap between the last sample and the start
    assert thetas[-1] - thetas[0] == pytest.approx(-2 * math.pi, abs=0.05)


def test_loop_stays_inside_the_open_quadrant(curve22):
    assert min(min(p.x, p.y) for p in curve22.points) > 0.5


def test_reflection_is_an_involution(curve22):
    for s in curve22.samples:
        twice = _reflect(_reflect(s, s.t), s.t)
        assert (twice.state.x, twice.state.y) == (s.state.x, s.state.y)
        # the unwrapped angle goes through c - (c - theta), exact up to rounding of c - theta
        assert abs(twice.state.theta - s.state.theta) <= 4 * math.ulp(2.5 * math.pi)


# -- sweeps -------------------------------------------------------------------------

def _grid():
    return [2.2 + (8.0 - 2.2) * i / 19 for i in range(20)]


@pytest.fixture(scope="module")
def sweep_rows(params22):
    return sweep(params22, IntegratorConfig(), _grid())


def test_sweep_has_a_single_transition(sweep_rows):
    assert [r.R for r in sweep_rows] == _grid()
    assert transitions(sweep_rows) == 1
    assert sweep_rows[0].outcome is not Outcome.RETURNS_TO_LINE
    assert sweep_rows[-1].outcome is Outcome.RETURNS_TO_LINE


def test_sweep_of_the_circle_radius(params22):
    (row,) = sweep(params22, IntegratorConfig(), [2.0])
    assert row.outcome is Outcome.HITS_X_AXIS


def test_empty_sweep(params22):
    assert sweep(params22, IntegratorConfig(), []) == []


def test_sweep_captures_failures_per_row(params22):
    rows = sweep(params22, IntegratorConfig(), [8.0, -1.0, 2.0])
    assert rows[0].outcome is Outcome.RETURNS_TO_LINE
    assert rows[1].outcome is None and "R must be positive" in rows[1].error
    assert rows[2].outcome is Outcome.HITS_X_AXIS


def test_parallel_sweep_matches_serial(params22, sweep_rows):
    rows = sweep(params22, IntegratorConfig(), _grid(), max_workers=2)
    assert rows == sweep_rows


def test_critical_points_of_the_offset_are_single_maxima(params22, sweep_rows):
    for R in _grid():
        markers = shoot(ShotSpec(R, params22)).trajectory.events_of(EventKind.CRITICAL_ANGLE)
        assert len(markers) <= 1
        assert all(ev.theta_dot < 0 for ev in markers)


def test_curl_persists_below_the_line(params22):
    # after the critical angle, while moving down-left below the line, the curve keeps turning clockwise
    for R in (3.1, 4.0, 8.0):
        traj = shoot(ShotSpec(R, params22)).trajectory
        t_crit = traj.events_of(EventKind.CRITICAL_ANGLE)[0].t
        inside = False
        for s in traj.resample(1e-2):
            c, sn = math.cos(s.state.theta), math.sin(s.state.theta)
            region = c < 0 and sn < 0 and s.state.y < s.state.x
            if s.t < t_crit:
                continue
            if region:
                inside = True
                assert s.theta_dot < 0
            elif inside:
                break
