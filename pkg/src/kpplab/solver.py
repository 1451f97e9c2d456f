"""Monotone IMEX time stepping for ``u_t = u_xx + f(x, u)`` on a truncated line.

One step solves

    (I - theta dt D2) u_new = u + (1 - theta) dt D2 u + dt f(x, u)

with the second-difference operator ``D2``. For ``theta = 1`` the implicit
matrix is an M-matrix and ``u -> u + dt f(x, u)`` is non-decreasing when
``dt * Lip(f) < 1``, so ordered data stay ordered (discrete comparison
principle).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .coefficients import CloseToPeriodic, PeriodicField, ReactionModel

BOUNDARY_LEFT = ("dirichlet_p", "neumann_zero")
BOUNDARY_RIGHT = ("dirichlet_zero", "neumann_zero")
# magnitudes below this are flushed to zero in the tridiagonal sweeps;
# subnormal far-field tails otherwise slow the solve by an order of magnitude
FLUSH = 1e-250


# -- tridiagonal kernel -------------------------------------------------------

@numba.njit(cache=True)
def _thomas_factor(a, b, c):
    n = b.shape[0]
    cp = np.empty(n)
    m = np.empty(n)
    m[0] = 1.0 / b[0]
    cp[0] = c[0] * m[0]
    for i in range(1, n):
        m[i] = 1.0 / (b[i] - a[i] * cp[i - 1])
        cp[i] = c[i] * m[i]
    return cp, m


@numba.njit(cache=True)
def _thomas_solve(a, cp, m, d, out):
    n = d.shape[0]
    out[0] = d[0] * m[0]
    for i in range(1, n):
        v = (d[i] - a[i] * out[i - 1]) * m[i]
        out[i] = v if abs(v) >= FLUSH else 0.0
    for i in range(n - 2, -1, -1):
        v = out[i] - cp[i] * out[i + 1]
        out[i] = v if abs(v) >= FLUSH else 0.0
    return out


class Tridiagonal:
    """Factored tridiagonal matrix; ``a[0]`` and ``c[-1]`` are ignored."""

    def __init__(self, a, b, c):
        self.a = np.ascontiguousarray(a, dtype=float)
        self.b = np.ascontiguousarray(b, dtype=float)
        self.c = np.ascontiguousarray(c, dtype=float)
        self.cp, self.m = _thomas_factor(self.a, self.b, self.c)
        if not (np.all(np.isfinite(self.m)) and np.all(np.isfinite(self.cp))):
            raise ArithmeticError("tridiagonal factorization broke down")

    def solve(self, d):
        out = np.empty_like(d)
        return _thomas_solve(self.a, self.cp, self.m, np.ascontiguousarray(d), out)

    def dense(self):
        n = self.b.size
        return (np.diag(self.b) + np.diag(self.a[1:], -1) + np.diag(self.c[:-1], 1))


# -- types --------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    @classmethod
    def for_period(cls, x_min, x_max, period=1.0, points_per_period=64):
        n = int(round((x_max - x_min) * points_per_period / period)) + 1
        dx = period / points_per_period
        return cls(float(x_min), float(x_min + (n - 1) * dx), n)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    def index_of(self, x0: float) -> int:
        return int(round((x0 - self.x_min) / self.dx))

    def cells_per_period(self, period: float) -> float:
        return period / self.dx

    def problems(self, period: float) -> list[str]:
        out = []
        if self.x_max - self.x_min < 20 * period:
            out.append(f"domain length {self.x_max - self.x_min:g} < 20 L = {20 * period:g}")
        if self.dx > period / 32 * (1 + 1e-12):
            out.append(f"dx = {self.dx:g} exceeds L/32 = {period / 32:g}")
        if self.n_points < 641:
            out.append(f"n_points = {self.n_points} < 641")
        return out

    def validate(self, period: float):
        probs = self.problems(period)
        if probs:
            raise ValueError("invalid grid: " + "; ".join(probs))
        return self


@dataclass(frozen=True)
class SchemeConfig:
    dt: float
    theta: float = 1.0
    boundary_left: str = "neumann_zero"
    boundary_right: str = "dirichlet_zero"
    monotone_mode: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("scheme.dt must be positive")
        if not 0 <= self.theta <= 1:
            raise ValueError("scheme.theta must lie in [0, 1]")
        if self.boundary_left not in BOUNDARY_LEFT:
            raise ValueError(f"boundary_left must be one of {BOUNDARY_LEFT}")
        if self.boundary_right not in BOUNDARY_RIGHT:
            raise ValueError(f"boundary_right must be one of {BOUNDARY_RIGHT}")

    @classmethod
    def default_for(cls, dx: float, **kw):
        return cls(dt=0.25 * dx, **kw)


@dataclass(frozen=True)
class SolutionState:
    t: float
    u: np.ndarray
    grid: Grid

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.shape != (self.grid.n_points,):
            raise ValueError("state does not match its grid")
        if not np.all(np.isfinite(u)):
            raise ValueError("state contains non-finite values")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


class BlowUpError(FloatingPointError):
    pass


# -- stepping -------------------------------------------------------------------

class Stepper:
    """Precomputed reaction coefficients and factorizations for one grid.

    ``x`` must be uniform. ``p_left`` is the value pinned at the left node
    under ``dirichlet_p``.
    """

    def __init__(self, x, model: ReactionModel, scheme: SchemeConfig, p_left=None):
        self.x = np.asarray(x, dtype=float)
        self.dx = float(self.x[1] - self.x[0])
        self.model = model
        self.scheme = scheme
        self.reaction = model.on_grid(self.x)
        self.u_cap = 1.1 * model.upper_bound()
        if scheme.boundary_left == "dirichlet_p" and p_left is None:
            raise ValueError("dirichlet_p boundary needs the stationary value p_left")
        self.p_left = p_left
        self._factors = {}
        if scheme.monotone_mode:
            self.check_monotone(scheme.dt)

    def check_monotone(self, dt):
        lip = self.model.lipschitz(self.u_cap)
        if dt * lip >= 1:
            raise ValueError(f"dt = {dt:g} too large for a monotone reaction step "
                             f"(dt * Lip(f) = {dt * lip:.3g} >= 1)")
        th = self.scheme.theta
        if th < 1 and dt > self.dx**2 / (2 * (1 - th)):
            raise ValueError(f"dt = {dt:g} exceeds the monotone limit "
                             f"dx^2 / (2 (1 - theta)) = {self.dx**2 / (2 * (1 - th)):g}")

    def _factor(self, dt):
        fac = self._factors.get(dt)
        if fac is None:
            n = self.x.size
            k = self.scheme.theta * dt / self.dx**2
            a = np.full(n, -k)
            b = np.full(n, 1 + 2 * k)
            c = np.full(n, -k)
            if self.scheme.boundary_left == "dirichlet_p":
                b[0], c[0] = 1.0, 0.0
            else:
                c[0] = -2 * k
            if self.scheme.boundary_right == "dirichlet_zero":
                a[-1], b[-1] = 0.0, 1.0
            else:
                a[-1] = -2 * k
            fac = Tridiagonal(a, b, c)
            if len(self._factors) > 8:
                self._factors.clear()
            self._factors[dt] = fac
        return fac

    def second_difference(self, u):
        d2 = np.empty_like(u)
        d2[1:-1] = u[2:] - 2 * u[1:-1] + u[:-2]
        d2[0] = 2 * (u[1] - u[0])
        d2[-1] = 2 * (u[-2] - u[-1])
        return d2 / self.dx**2

    def advance(self, u, dt=None, t=None):
        dt = self.scheme.dt if dt is None else dt
        sch = self.scheme
        rhs = u + dt * self.reaction.rate(u)
        if sch.theta < 1:
            rhs = rhs + (1 - sch.theta) * dt * self.second_difference(u)
        if sch.boundary_left == "dirichlet_p":
            rhs[0] = self.p_left
        if sch.boundary_right == "dirichlet_zero":
            rhs[-1] = 0.0
        out = self._factor(dt).solve(rhs)
        if sch.monotone_mode:
            np.clip(out, 0.0, self.u_cap, out=out)
        if not np.all(np.isfinite(out)):
            raise BlowUpError(f"blow-up: non-finite values at t = {t}")
        return out


def step(state: SolutionState, model: ReactionModel, scheme: SchemeConfig,
         p_left=None, stepper: Stepper | None = None) -> SolutionState:
    """Advance ``state`` by one ``scheme.dt``."""
    stepper = stepper or Stepper(state.grid.x, model, scheme, p_left)
    u = stepper.advance(np.array(state.u), t=state.t + scheme.dt)
    return SolutionState(state.t + scheme.dt, u, state.grid)


# -- observers ------------------------------------------------------------------

class Observer:
    """Called on the initial state and then every ``every`` time units
    (every step when ``every`` is None)."""

    name = "observer"
    every: float | None = None

    def __call__(self, t, u, x):
        raise NotImplementedError


class Snapshots(Observer):
    def __init__(self, every, name="snapshots"):
        self.every, self.name = every, name

    def __call__(self, t, u, x):
        return (t, u.copy())


class FrontTracker(Observer):
    """Rightmost crossing of ``level`` and the total mass."""

    def __init__(self, level, every=None, name="front"):
        self.level, self.every, self.name = level, every, name

    def __call__(self, t, u, x):
        from .diagnostics import crossing_position
        try:
            pos = crossing_position(x, u, self.level)
        except ValueError:
            pos = math.nan
        mass = float(np.sum(u) * (x[1] - x[0]))
        return (t, pos, mass)


class Stations(Observer):
    """u sampled at fixed grid nodes (nearest node to each position)."""

    def __init__(self, x, positions, every=None, name="stations"):
        dx = x[1] - x[0]
        self.positions = np.asarray(positions, dtype=float)
        self.index = np.rint((self.positions - x[0]) / dx).astype(int)
        self.every, self.name = every, name

    def __call__(self, t, u, x):
        return (t, u[self.index].copy())


class Callback(Observer):
    def __init__(self, func, every=None, name="callback"):
        self.func, self.every, self.name = func, every, name

    def __call__(self, t, u, x):
        return self.func(t, u, x)


def run(state: SolutionState, model: ReactionModel, scheme: SchemeConfig,
        t_end: float, observers=(), p_left=None, stepper: Stepper | None = None):
    """Step from ``state.t`` to exactly ``t_end``.

    Returns ``(final_state, log)`` where ``log[name]`` lists the records of
    each observer. The last step is shortened to land on ``t_end``.
    """
    t0 = state.t
    if t_end < t0:
        raise ValueError("t_end must not precede the current time")
    if t_end == t0:
        return state, {}
    stepper = stepper or Stepper(state.grid.x, model, scheme, p_left)
    x = stepper.x
    dt = scheme.dt
    n_full = int(math.floor((t_end - t0) / dt + 1e-9))
    tail = t_end - (t0 + n_full * dt)
    steps = [dt] * n_full
    if tail > 1e-9 * dt:
        steps.append(tail)
    elif n_full == 0:
        steps.append(t_end - t0)
    log = {ob.name: [ob(t0, state.u, x)] for ob in observers}
    due = {ob.name: 1 for ob in observers}
    u = np.array(state.u)
    t = t0
    for k, h in enumerate(steps, start=1):
        t_next = t0 + k * dt if k <= n_full else t_end
        u = stepper.advance(u, h, t_next)
        t = t_next
        for ob in observers:
            if ob.every is None:
                log[ob.name].append(ob(t, u, x))
            elif t >= t0 + due[ob.name] * ob.every - 1e-9 * ob.every:
                log[ob.name].append(ob(t, u, x))
                due[ob.name] = int(math.floor((t - t0) / ob.every + 1e-9)) + 1
    return SolutionState(t_end, u, state.grid), log


# -- stationary state -----------------------------------------------------------

@dataclass
class Stationary:
    """Maximal stationary state ``p`` on a grid (plus one periodic cell
    when the model is periodic)."""

    x: np.ndarray
    values: np.ndarray
    periodic: bool
    cell: PeriodicField | None = None
    residual: float = math.nan
    steps: int = 0

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def at(self, x0: float) -> float:
        if self.x[0] <= x0 <= self.x[-1]:
            return float(np.interp(x0, self.x, self.values))
        if self.cell is None:
            raise ValueError(f"x = {x0} outside the stationary-state grid")
        return float(self.cell(x0))


class NonMonotoneError(RuntimeError):
    pass


def _relax(advance, u, dt, tol, max_steps):
    for k in range(1, max_steps + 1):
        new = advance(u)
        if np.any(new > u + 1e-8):
            raise NonMonotoneError("scheme not monotone at this dt")
        change = np.max(np.abs(new - u)) / dt
        u = new
        if change < tol:
            return u, k
    raise RuntimeError(f"stationary relaxation did not reach tol = {tol:g} "
                       f"in {max_steps} steps (last |u_t| = {change:.3e})")


def _cell_relax(rate, period, n, m0, dt, tol, max_steps):
    h = period / n
    k = dt / h**2
    mat = (1 + 2 * k) * np.eye(n) - k * (np.eye(n, k=1) + np.eye(n, k=-1))
    mat[0, -1] = mat[-1, 0] = -k
    inv = np.linalg.inv(mat)
    return _relax(lambda v: inv @ (v + dt * rate(v)), np.full(n, m0), dt, tol, max_steps)


def stationary_cell(model: ReactionModel, n: int, tol=1e-11, max_steps=200000, shift=0.0):
    """Periodic stationary state on one cell of ``n`` nodes.

    The reaction is sampled at ``shift + k L / n``; a non-periodic model may
    be passed when it is periodic over the sampled range (e.g. a
    close-to-periodic model on x <= 0).
    """
    L = model.period
    x = shift + np.arange(n) * (L / n)
    m0 = 1.1 * model.upper_bound()
    dt = min(0.5 / model.lipschitz(m0), 1.0)
    u, steps = _cell_relax(model.on_grid(x).rate, L, n, m0, dt, tol, max_steps)
    return PeriodicField(L, u), steps


def _aligned_cells(x, period):
    """Cell size in nodes and the node phase of x[0], or None when the grid
    does not tile the period."""
    dx = x[1] - x[0]
    n = int(round(period / dx))
    if n < 2 or abs(n * dx - period) > 1e-9 * period:
        return None
    j0 = x[0] / dx
    if abs(j0 - round(j0)) > 1e-6:
        return None
    return n, int(round(j0))


def _tile(cell: PeriodicField, n, j0, size):
    return cell.samples[np.mod(j0 + np.arange(size), n)]


def stationary_upper(model: ReactionModel, x, tol: float = 1e-10,
                     max_steps: int = 200000) -> Stationary:
    """Maximal stationary state by monotone relaxation from a supersolution.

    Starts from ``M = 1.1 sup{s : sup_x f(x, s) >= 0}`` and steps until
    ``max |u_t| < tol``. The iterates decrease in time; an increase above
    1e-8 aborts with :class:`NonMonotoneError`.

    Reflecting ends distort a periodic state in a boundary layer, so on
    grids that tile the period: periodic models relax one cell and tile it;
    close-to-periodic models pin both ends to the periodic states of the
    limiting media (x -> -inf and x -> +inf). Other grids use Neumann ends.
    """
    x = x.x if isinstance(x, Grid) else np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    m0 = 1.1 * model.upper_bound()
    dt = min(0.5 / model.lipschitz(m0), 1.0)
    reaction = model.on_grid(x)
    aligned = _aligned_cells(x, model.period)
    cell = None
    if aligned is not None and model.is_periodic:
        n, j0 = aligned
        cell, steps = stationary_cell(model, n, tol=tol, max_steps=max_steps)
        u = _tile(cell, n, j0, x.size)
    else:
        k = dt / dx**2
        a = np.full(x.size, -k)
        b = np.full(x.size, 1 + 2 * k)
        c = np.full(x.size, -k)
        pins = None
        if aligned is not None and isinstance(model, CloseToPeriodic):
            n, j0 = aligned
            left, _ = stationary_cell(model, n, tol=tol, shift=-model.period)
            right, _ = stationary_cell(model.base, n, tol=tol)
            pins = (_tile(left, n, j0, 1)[0], _tile(right, n, j0 + x.size - 1, 1)[0])
            b[0] = b[-1] = 1.0
            c[0] = a[-1] = 0.0
        else:
            c[0], a[-1] = -2 * k, -2 * k
        tri = Tridiagonal(a, b, c)

        def advance(v):
            rhs = v + dt * reaction.rate(v)
            if pins is not None:
                rhs[0], rhs[-1] = pins
            return tri.solve(rhs)

        u, steps = _relax(advance, np.full(x.size, m0), dt, tol, max_steps)
    d2 = (u[2:] - 2 * u[1:-1] + u[:-2]) / dx**2
    residual = float(np.max(np.abs(d2 + reaction.rate(u)[1:-1])))
    return Stationary(x, u, model.is_periodic, cell, residual, steps)


# -- initial data ---------------------------------------------------------------

def bump(x, a, b, height=1.0, p=None, smooth=True):
    """``height`` on ``[a, b]``, zero elsewhere, capped by ``p``.

    Smoothing is one explicit diffusion sweep with weight 1/4, which keeps
    the support compact (it grows by one node on each side).
    """
    u = np.where((x >= a) & (x <= b), float(height), 0.0)
    if smooth:
        v = u.copy()
        v[1:-1] = u[1:-1] + 0.25 * (u[2:] - 2 * u[1:-1] + u[:-2])
        u = v
    if p is not None:
        u = np.minimum(u, p)
    return u


def exp_tail(x, amplitude, rate, p, phi=None):
    """``min(p, A phi(x) exp(-rate x))``; ``phi`` defaults to 1."""
    with np.errstate(over="ignore"):
        tail = amplitude * np.exp(-rate * x)
    if phi is not None:
        tail = tail * phi(x)
    return np.minimum(p, tail)


def heaviside(x, a, p):
    """``H(a - x) p(x)``, equal to p strictly left of ``a``."""
    return np.where(x < a, p, 0.0)
