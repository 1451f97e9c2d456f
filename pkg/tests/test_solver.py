import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpplab.coefficients import CloseToPeriodic, GeneralPeriodic, PeriodicField, PeriodicLogistic
from kpplab.diagnostics import crossing_position
from kpplab.floquet import dispersion_for
from kpplab.solver import (BlowUpError, FrontTracker, Grid, SchemeConfig, Snapshots,
                           SolutionState, Stepper, bump, exp_tail, heaviside, run,
                           stationary_upper, step)

from oracles import logistic_ode, newton_periodic_stationary, spectral_periodic_stationary

KAPPA = lambda x: 1 + 0.25 * np.sin(2 * np.pi * x)
COS_MU = lambda x: 1 + 0.5 * np.cos(2 * np.pi * x)


def logistic(kappa=None, mu=None):
    const = PeriodicField.constant(1.0)
    k = PeriodicField.from_function(kappa, 1.0, 64) if kappa else const
    m = PeriodicField.from_function(mu, 1.0, 64) if mu else const
    return PeriodicLogistic(m, k)


def zero_model():
    return GeneralPeriodic(1.0, [0.0, 1.0, 2.0], np.zeros((4, 3)))


def small_grid(x_min=-10.0, x_max=30.0, ppp=32):
    return Grid.for_period(x_min, x_max, 1.0, ppp)


# -- grid / scheme / state -------------------------------------------------------

def test_grid_geometry():
    g = Grid.for_period(-20, 40, 1.0, 32)
    assert g.dx == pytest.approx(1 / 32)
    assert g.n_points == 60 * 32 + 1
    assert g.x[g.index_of(0.0)] == pytest.approx(0.0, abs=1e-12)
    assert g.problems(1.0) == []


def test_grid_problems_listed():
    probs = Grid(0.0, 10.0, 101).problems(1.0)
    assert len(probs) == 3
    with pytest.raises(ValueError):
        Grid(0.0, 10.0, 101).validate(1.0)


def test_scheme_validation():
    with pytest.raises(ValueError):
        SchemeConfig(dt=0.0)
    with pytest.raises(ValueError):
        SchemeConfig(dt=0.1, theta=1.5)
    with pytest.raises(ValueError):
        SchemeConfig(dt=0.1, boundary_left="periodic")


def test_state_rejects_non_finite():
    g = small_grid()
    u = np.zeros(g.n_points)
    u[3] = np.nan
    with pytest.raises(ValueError):
        SolutionState(0.0, u, g)


def test_monotone_mode_limits_dt():
    g = small_grid()
    with pytest.raises(ValueError, match="monotone"):
        Stepper(g.x, logistic(), SchemeConfig(dt=g.dx**2, theta=0.0))
    with pytest.raises(ValueError, match="Lip"):
        Stepper(g.x, logistic(), SchemeConfig(dt=2.0))
    with pytest.raises(ValueError, match="p_left"):
        Stepper(g.x, logistic(), SchemeConfig(dt=0.01, boundary_left="dirichlet_p"))


def test_blow_up_reported():
    g = small_grid()
    model = GeneralPeriodic(1.0, [0.0, 1.0], np.array([[0.0, 1e308]] * 2))
    st_ = Stepper(g.x, model, SchemeConfig(dt=0.01, monotone_mode=False))
    u = np.full(g.n_points, 1e300)
    with pytest.raises(BlowUpError, match="blow-up"), np.errstate(all="ignore"):
        for _ in range(5):
            u = st_.advance(u, t=0.0)


# -- stepping examples -------------------------------------------------------------

def test_pure_diffusion_max_non_increasing():
    g = small_grid()
    rng = np.random.default_rng(1)
    state = SolutionState(0.0, rng.random(g.n_points), g)
    scheme = SchemeConfig.default_for(g.dx)
    stepper = Stepper(g.x, zero_model(), scheme)
    prev = state.u.max()
    for _ in range(100):
        state = step(state, zero_model(), scheme, stepper=stepper)
        assert state.u.max() <= prev + 1e-15
        prev = state.u.max()


def test_constant_datum_follows_logistic_ode():
    g = small_grid()
    scheme = SchemeConfig(dt=1e-3)
    state = SolutionState(0.0, np.full(g.n_points, 0.5), g)
    scheme_r = SchemeConfig(dt=1e-3, boundary_right="neumann_zero")
    final, _ = run(state, logistic(), scheme_r, 1.0)
    exact = logistic_ode(1.0, 0.5)
    assert exact == pytest.approx(np.e / (1 + np.e))
    assert np.max(np.abs(final.u - exact)) <= 5e-3
    assert scheme.boundary_left == "neumann_zero"


def test_homogeneous_speed_near_two():
    g = Grid.for_period(-20, 440, 1.0, 32)
    p = np.ones(g.n_points)
    state = SolutionState(0.0, bump(g.x, -1, 1, 1.0, p), g)
    scheme = SchemeConfig.default_for(g.dx)
    _, log = run(state, logistic(), scheme, 200.0, [FrontTracker(0.5, every=10.0)])
    t, pos, _ = map(np.array, zip(*log["front"]))
    i150 = np.argmin(np.abs(t - 150))
    speed = (pos[-1] - pos[i150]) / (t[-1] - t[i150])
    assert speed == pytest.approx(2.0, rel=0.03)


def test_run_identity_and_snapshot_count():
    g = small_grid()
    state = SolutionState(0.0, bump(g.x, -1, 1), g)
    scheme = SchemeConfig.default_for(g.dx)
    same, log = run(state, logistic(), scheme, 0.0, [Snapshots(1.0)])
    assert same is state and log == {}
    final, log = run(state, logistic(), scheme, 10.0, [Snapshots(1.0)])
    assert final.t == 10.0
    times = [rec[0] for rec in log["snapshots"]]
    assert len(times) == 11
    np.testing.assert_allclose(times, np.arange(11.0), atol=1e-9)


def test_run_lands_on_t_end():
    g = small_grid()
    scheme = SchemeConfig(dt=0.3 * g.dx)
    final, _ = run(SolutionState(0.0, bump(g.x, -1, 1), g), logistic(), scheme, 1.2345)
    assert final.t == 1.2345


def test_cosine_run_bit_reproducible():
    g = Grid.for_period(-20, 330, 1.0, 32)
    model = logistic(mu=COS_MU)
    scheme = SchemeConfig.default_for(g.dx)

    def once():
        state = SolutionState(0.0, bump(g.x, -1, 1), g)
        _, log = run(state, model, scheme, 150.0, [FrontTracker(0.5, every=1.0)])
        return np.array([rec[1] for rec in log["front"]])

    a, b = once(), once()
    assert a.size == 151
    assert np.array_equal(a, b)


# -- properties ------------------------------------------------------------------

COMP_GRID = Grid.for_period(-10, 10, 1.0, 32)
COMP_MODEL = logistic(kappa=KAPPA, mu=COS_MU)
COMP_STEPPER = Stepper(COMP_GRID.x, COMP_MODEL, SchemeConfig.default_for(COMP_GRID.dx))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_discrete_comparison_principle(seed):
    rng = np.random.default_rng(seed)
    n = COMP_GRID.n_points
    u = rng.random(n) * 1.3
    v = u + rng.random(n) * rng.random() * 0.5
    for _ in range(200):
        u = COMP_STEPPER.advance(u)
        v = COMP_STEPPER.advance(v)
    assert np.min(v - u) >= -1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_invariant_interval(seed):
    rng = np.random.default_rng(seed)
    p = stationary_upper(COMP_MODEL, COMP_GRID).values
    u = p * rng.random(p.size)
    for _ in range(200):
        u = COMP_STEPPER.advance(u)
        assert u.min() >= 0
        assert np.all(u <= p + 1e-8)


def test_space_convergence_order():
    # dt fixed across grids so only the spatial error varies
    model = logistic(mu=COS_MU)
    pos = []
    for ppp in (32, 64, 128):
        g = Grid.for_period(-20, 40, 1.0, ppp)
        state = SolutionState(0.0, np.exp(-g.x**2), g)
        final, _ = run(state, model, SchemeConfig(dt=2e-3), 5.0)
        pos.append(crossing_position(g.x, final.u, 0.5))
    order = np.log2(abs(pos[0] - pos[1]) / abs(pos[1] - pos[2]))
    assert order >= 1.7


def test_left_boundary_insensitivity():
    model = logistic(mu=COS_MU)
    finals = []
    for x_min in (-20.0, -30.0):
        g = Grid.for_period(x_min, 80, 1.0, 32)
        state = SolutionState(0.0, heaviside(g.x, 0.0, np.ones(g.n_points)), g)
        final, _ = run(state, model, SchemeConfig.default_for(g.dx), 20.0)
        finals.append((g.x, final.u))
    (xa, ua), (xb, ub) = finals
    right = xa >= 30
    off = int(round((xa[0] - xb[0]) * 32))
    assert np.max(np.abs(ua[right] - ub[off:][right])) < 1e-8


# -- stationary states ----------------------------------------------------------

def test_stationary_homogeneous():
    st_ = stationary_upper(logistic(), small_grid())
    assert np.max(np.abs(st_.values - 1)) <= 1e-8
    assert st_.periodic


def test_stationary_periodic_against_newton():
    model = logistic(kappa=KAPPA)
    g = Grid.for_period(-10, 10, 1.0, 64)
    st_ = stationary_upper(model, g)
    assert st_.residual <= 1e-6
    assert st_.values.min() > 0
    xo, po = newton_periodic_stationary(lambda x: np.ones_like(x), KAPPA, 64)
    assert np.max(np.abs(st_.values - np.interp(np.mod(g.x, 1), xo, po, period=1))) <= 1e-5
    np.testing.assert_allclose(st_.cell.samples, po, atol=1e-5)
    # the finite-difference state is within O(dx^2) of the continuum one
    _, ps = spectral_periodic_stationary(lambda x: np.ones_like(x), KAPPA, 64)
    assert np.max(np.abs(po - ps)) <= 1e-4


def test_stationary_close_to_periodic_approaches_base():
    base = logistic()
    lam_star = dispersion_for(base).lambda_star
    model = CloseToPeriodic(base, 1.0, 2 * lam_star)
    g = Grid.for_period(-20, 40, 1.0, 32)
    p = stationary_upper(model, g)
    pt = stationary_upper(base, g)
    i = g.index_of(15.0)
    assert abs(p.values[i] - pt.values[i]) <= 1e-3 * pt.norm
    assert not p.periodic and p.cell is None


def test_stationary_at_uses_cell_outside():
    model = logistic(kappa=KAPPA)
    st_ = stationary_upper(model, Grid.for_period(-10, 10, 1.0, 32))
    assert st_.at(105.25) == pytest.approx(st_.at(0.25), abs=1e-9)


# -- initial data ---------------------------------------------------------------

def test_initial_data_shapes():
    g = small_grid()
    p = np.full(g.n_points, 0.8)
    b = bump(g.x, -1, 1, 1.0, p)
    assert b.max() == 0.8 and b[g.x < -1.2].max() == 0 and b[g.x > 1.2].max() == 0
    e = exp_tail(g.x, 2.0, 1.0, p)
    assert np.all(e <= p) and e[-1] == pytest.approx(2 * np.exp(-g.x[-1]))
    h = heaviside(g.x, 0.0, p)
    assert np.all(h[g.x < 0] == 0.8) and np.all(h[g.x >= 0] == 0)
