import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpplab.coefficients import PeriodicField, PeriodicLogistic
from kpplab.diagnostics import (CrossingSeries, crossing_position, crossing_shift,
                                half_line_distance, hitting_times, intersection_count,
                                is_steeper, level_crossing, log_corrected_fit, optimal_shift,
                                shift_estimate, speed_estimate)
from kpplab.floquet import dispersion_for
from kpplab.fronts import compute_front
from kpplab.solver import (FrontTracker, Grid, SchemeConfig, SolutionState, Stations, Stepper,
                           bump, run)


def flat_model():
    return PeriodicLogistic(PeriodicField.constant(1.0), PeriodicField.constant(1.0))


def cos_model():
    return PeriodicLogistic(PeriodicField.constant(1.0),
                            PeriodicField.from_fourier([1.0, 0.5], [], 1.0, 64))


# -- level crossings ---------------------------------------------------------------

def test_crossing_linear_profile():
    g = Grid(-2.0, 3.0, 5001)
    u = np.maximum(0.0, 1 - g.x)
    state = SolutionState(0.0, np.minimum(u, 1.0), g)
    assert level_crossing(state, 0.5) == pytest.approx(0.5, abs=g.dx**2)


def test_crossing_not_attained():
    x = np.linspace(0, 1, 11)
    with pytest.raises(ValueError, match="level not attained"):
        crossing_position(x, np.full(11, 0.2), 0.5)


def test_crossing_rightmost_of_sawtooth():
    x = np.linspace(0, 10, 10001)
    # triangle waves crossing 0.5 downward at 2, 5 and 8
    u = np.interp(x, [0, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5, 8.5, 10],
                  [1, 1, 0, 0, 1, 0, 0, 1, 0, 0])
    assert crossing_position(x, u, 0.5) == pytest.approx(8.0, abs=1e-9)


# -- hitting times --------------------------------------------------------------------

def test_hitting_times_translating_profile():
    theta = 0.5
    times = np.linspace(0, 20, 401)
    stations = np.arange(1, 11, dtype=float)
    # U0(y) = theta - y near 0, so u(t, k) is linear in t and interpolation is exact
    vals = np.clip(theta - (stations[None, :] - 2 * times[:, None]), 0, 1)
    np.testing.assert_allclose(hitting_times(times, vals, theta), stations / 2, atol=1e-12)


def test_hitting_times_station_behind_and_absent():
    times = np.array([0.0, 1.0, 2.0])
    vals = np.array([[0.9, 0.0], [0.9, 0.1], [0.9, 0.2]])
    out = hitting_times(times, vals, 0.5)
    assert out[0] == 0.0
    assert np.isnan(out[1])


@pytest.fixture(scope="module")
def flat_run():
    g = Grid.for_period(-20, 440, 1.0, 32)
    model = flat_model()
    scheme = SchemeConfig.default_for(g.dx)
    state = SolutionState(0.0, bump(g.x, -1, 1), g)
    stations = np.arange(10, 31, 1.0)
    _, log = run(state, model, scheme, 200.0,
                 [FrontTracker(0.5, every=1.0), Stations(g.x, stations)])
    return log, stations


def test_hitting_times_homogeneous(flat_run):
    log, stations = flat_run
    t = np.array([r[0] for r in log["stations"]])
    vals = np.array([r[1] for r in log["stations"]])
    tk = hitting_times(t, vals, 0.5)
    assert np.all(np.diff(tk) > 0)
    # t_k / k approaches 1/c* from above through the logarithmic delay,
    # so the asymptotic slope is read off a log-corrected fit
    ratio = tk / stations
    assert np.all(np.diff(ratio) < 0) and ratio[-1] > 0.5
    design = np.column_stack([stations, np.log(stations), np.ones_like(stations)])
    slope = np.linalg.lstsq(design, tk, rcond=None)[0][0]
    assert slope == pytest.approx(0.5, rel=0.03)


def test_speed_homogeneous(flat_run):
    log, _ = flat_run
    series = CrossingSeries.from_log(0.5, log["front"])
    c_hat, err = speed_estimate(series, (100, 200))
    assert c_hat == pytest.approx(2.0, rel=0.03)
    assert err < 1e-2


# -- fits on synthetic series --------------------------------------------------------

def synthetic(c=2.0, a=1.5, b=0.3, t=(50, 400)):
    times = np.linspace(*t, 351)
    return CrossingSeries(0.5, times, c * times - a * np.log(times) + b)


def test_speed_estimate_effective_slope():
    s = synthetic()
    c_hat, _ = speed_estimate(s, (50, 400))
    assert c_hat == pytest.approx(2 - 1.5 / np.mean(s.times), rel=0.01)


def test_speed_estimate_needs_points():
    with pytest.raises(ValueError):
        speed_estimate(synthetic(), (50, 55))


def test_log_corrected_fit_exact():
    c, a, b = log_corrected_fit(synthetic(), (50, 400))
    assert (c, a, b) == pytest.approx((2.0, 1.5, 0.3), abs=1e-6)


def test_shift_estimate_synthetic():
    sh = shift_estimate(synthetic(t=(10, 400)), 2.0, 1.0, t_burn=10)
    assert sh.a_fit == pytest.approx(1.5, abs=1e-6)
    assert sh.a_time == pytest.approx(0.75, abs=1e-6)
    assert sh.b_fit == pytest.approx(0.3, abs=1e-6)
    np.testing.assert_allclose(sh.lag, 1.5 * np.log(sh.times) - 0.3, atol=1e-9)


def test_shift_estimate_constant_speed():
    sh = shift_estimate(synthetic(a=0.0, b=0.0, t=(10, 400)), 2.0, 1.0, t_burn=10)
    assert abs(sh.a_fit) <= 1e-6


def test_shift_estimate_needs_log_span():
    with pytest.raises(ValueError, match="decade"):
        shift_estimate(synthetic(), 2.0, 1.0, t_burn=60)
    sh = shift_estimate(synthetic(), 2.0, 1.0, t_burn=50)
    assert sh.a_fit == pytest.approx(1.5, abs=1e-6)


def test_shift_estimate_ill_conditioned():
    with pytest.raises(ValueError, match="ill-conditioned"):
        shift_estimate(synthetic(t=(10, 400)), 2.0, 1.0, t_burn=10, max_cond=1.0)


def test_crossing_series_validation():
    with pytest.raises(ValueError):
        CrossingSeries(0.5, [0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        CrossingSeries(0.5, [0.0, 1.0], [1.0, np.nan])


# -- steepness / intersections ---------------------------------------------------------

def test_heaviside_is_steeper_than_continuous():
    x = np.linspace(-10, 10, 2001)
    p = 1 + 0.25 * np.sin(2 * np.pi * x)
    u1 = np.where(x < 1, p, 0.0)
    for u2 in (0.5 * p, p / (1 + np.exp(x)), np.exp(-x**2) * p):
        assert is_steeper(u1, u2)


def test_steeper_examples():
    x = np.linspace(-5, 5, 1001)
    u = np.exp(-x**2)
    assert is_steeper(u, u) and intersection_count(u, u) == 0
    u1, u2 = np.exp(-2 * x), np.exp(-x)
    assert is_steeper(u1, u2)
    assert not is_steeper(u2, u1)


def test_intersections_of_sine():
    x = np.linspace(0, 3 * np.pi, 3001)[1:-1]
    assert intersection_count(np.sin(x), np.zeros_like(x)) == 2


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=60), st.floats(0, 0.5))
def test_intersections_symmetric_and_steepness_consistent(vals, db):
    u = np.array(vals)
    v = np.zeros_like(u)
    n = intersection_count(u, v, db)
    assert n == intersection_count(v, u, db)
    if n == 0:
        assert is_steeper(u, v, db) and is_steeper(v, u, db)
    if n >= 2:
        assert not is_steeper(u, v, db) and not is_steeper(v, u, db)


DYN_GRID = Grid.for_period(-10, 10, 1.0, 32)
DYN_STEPPER = Stepper(DYN_GRID.x, cos_model(), SchemeConfig.default_for(DYN_GRID.dx))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_intersection_count_non_increasing(seed):
    rng = np.random.default_rng(seed)
    x = DYN_GRID.x
    # smooth random fields: a few random Gaussian bumps each
    def field():
        c = rng.uniform(-8, 8, 4)
        h = rng.uniform(0.1, 1.2, 4)
        return np.clip(np.sum(h[:, None] * np.exp(-(x[None, :] - c[:, None])**2), 0), 0, 1.4)
    u, v = field(), field()
    counts = [intersection_count(u, v)]
    for _ in range(100):
        u, v = DYN_STEPPER.advance(u), DYN_STEPPER.advance(v)
        counts.append(intersection_count(u, v))
    assert counts[-1] <= counts[0]
    assert np.all(np.diff(counts) <= 0)


# -- distances to a front --------------------------------------------------------------

@pytest.fixture(scope="module")
def cos_front():
    model = cos_model()
    disp = dispersion_for(model)
    return compute_front(model, disp.c_star + 0.5, disp)


def window_grid(prof):
    return Grid(float(prof.x[0]), float(prof.x[-1]), prof.x.size)


def test_self_distance_zero(cos_front):
    g = window_grid(cos_front)
    state = SolutionState(0.0, cos_front.phases[0], g)
    assert half_line_distance(state, cos_front, g.x_min, 0.0) <= 1e-8


def test_period_shift_distance(cos_front):
    prof = cos_front
    g = window_grid(prof)
    k = prof.cells
    u = np.concatenate([prof.p_window[:k], prof.phases[0][:-k]])
    state = SolutionState(2 * prof.T, u, g)
    assert half_line_distance(state, prof, g.x_min, prof.T) <= 1e-6


def test_optimal_shift_recovers_time_shift(cos_front):
    prof = cos_front
    g = window_grid(prof)
    m0 = 0.37 * prof.T
    t = 3 * prof.T
    inner = g.x[(g.x >= -20) & (g.x <= 40)]
    u = np.zeros(g.n_points)
    sel = (g.x >= -20) & (g.x <= 40)
    u[sel] = prof.value(t - m0, inner)
    u[g.x < -20] = prof.p_window[g.x < -20]
    state = SolutionState(t, u, g)
    assert crossing_shift(state, prof) == pytest.approx(m0, abs=0.02 * prof.T)
    d, m = optimal_shift(state, prof, a=-15.0, tol=1e-10)
    assert m == pytest.approx(m0, abs=1e-6)
    assert d <= 1e-6
