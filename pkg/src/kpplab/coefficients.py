"""Periodic coefficient fields and KPP reaction terms.

A reaction model supplies ``f(x, u)`` pointwise, its linearization
``r(x) = d/du f(x, 0)``, and a fast evaluator bound to a fixed grid
(:meth:`ReactionModel.on_grid`) that the time stepper calls every step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline


class PeriodicField:
    """An L-periodic function sampled at ``n`` uniform nodes ``j * L / n``.

    Parameters
    ----------
    period : float
        Spatial period ``L``.
    samples : array_like
        Values at the nodes of one cell (the node at ``x = L`` is implied).
    order : int
        1 for linear, 3 for periodic cubic-spline interpolation.
    """

    def __init__(self, period: float, samples, order: int = 3):
        samples = np.asarray(samples, dtype=float)
        if not period > 0:
            raise ValueError(f"period must be positive, got {period}")
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("samples must be a 1-D array with at least 2 values")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if order not in (1, 3):
            raise ValueError("order must be 1 or 3")
        self.period = float(period)
        self.samples = samples
        self.samples.setflags(write=False)
        self.order = order
        self._spline = None
        if order == 3:
            nodes = np.arange(samples.size + 1) * self.spacing
            closed = np.append(samples, samples[0])
            self._spline = CubicSpline(nodes, closed, bc_type="periodic")

    @classmethod
    def from_function(cls, func: Callable, period: float, n: int, order: int = 3):
        x = np.arange(n) * (period / n)
        return cls(period, np.broadcast_to(func(x), x.shape).astype(float), order)

    @classmethod
    def constant(cls, value: float, period: float = 1.0, n: int = 64):
        return cls(period, np.full(n, float(value)), order=3)

    @classmethod
    def from_fourier(cls, cos: Sequence[float], sin: Sequence[float] = (),
                     period: float = 1.0, n: int = 256):
        """Build ``a0 + sum_k a_k cos(2 pi k x/L) + b_k sin(2 pi k x/L)``.

        ``cos[0]`` is the mean, ``sin[k-1]`` multiplies the k-th sine.
        """
        cos = list(cos) or [0.0]

        def func(x):
            w = 2 * np.pi * x / period
            out = np.full_like(x, float(cos[0]))
            for k, a in enumerate(cos[1:], start=1):
                out = out + a * np.cos(k * w)
            for k, b in enumerate(sin, start=1):
                out = out + b * np.sin(k * w)
            return out

        return cls.from_function(func, period, n)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def spacing(self) -> float:
        return self.period / self.samples.size

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xm = np.mod(x, self.period)
        if self.order == 3:
            return self._spline(xm)
        s = xm / self.spacing
        i = np.floor(s).astype(int)
        w = s - i
        i %= self.n
        return (1 - w) * self.samples[i] + w * self.samples[(i + 1) % self.n]

    def at_index(self, j):
        """Exact value at node ``j`` (any integer, wrapped)."""
        return self.samples[np.mod(j, self.n)]

    def resample(self, n: int) -> "PeriodicField":
        if n == self.n:
            return self
        return PeriodicField(self.period, self(np.arange(n) * (self.period / n)), self.order)

    def max(self) -> float:
        return float(self.samples.max())

    def min(self) -> float:
        return float(self.samples.min())

    def __repr__(self):
        return f"PeriodicField(period={self.period}, n={self.n}, order={self.order})"


def _check_finite(x, u):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
        raise ValueError("non-finite input to reaction term: "
                         f"x finite={bool(np.all(np.isfinite(x)))}, "
                         f"u finite={bool(np.all(np.isfinite(u)))}")
    return x, u


class GridReaction:
    """Reaction term frozen on a grid: ``rate(u)`` returns f(x_i, u_i).

    Logistic-type models reduce to ``f = u (a - b u)`` with per-node
    coefficients; tabulated models fall back to a generic callable.
    """

    def __init__(self, x, a=None, b=None, func=None, r=None):
        self.x = x
        self.a = a
        self.b = b
        self._func = func
        self.r = r

    def rate(self, u: np.ndarray) -> np.ndarray:
        if self._func is None:
            return u * (self.a - self.b * u)
        return self._func(u)


class ReactionModel:
    """Base class. Subclasses implement ``f``, ``linearization`` and
    ``on_grid``; ``kind`` tags the variant."""

    kind = "abstract"
    period: float

    @property
    def is_periodic(self) -> bool:
        return True

    def f(self, x, u):
        raise NotImplementedError

    def linearization(self, x):
        raise NotImplementedError

    def on_grid(self, x: np.ndarray) -> GridReaction:
        raise NotImplementedError

    def upper_bound(self) -> float:
        """sup{s : sup_x f(x, s) >= 0}; every stationary state lies below."""
        raise NotImplementedError

    def lipschitz(self, u_max: float) -> float:
        """Bound on |d f/du| over u in [0, u_max]."""
        raise NotImplementedError

    def linearization_field(self, n: int = 128) -> PeriodicField:
        return PeriodicField.from_function(self.linearization, self.period, n)


@dataclass(frozen=True, eq=False)
class PeriodicLogistic(ReactionModel):
    """``f(x, u) = mu_hat(x) u (kappa(x) - u)``."""

    mu_hat: PeriodicField
    kappa: PeriodicField
    kind = "PeriodicLogistic"

    def __post_init__(self):
        if not np.isclose(self.mu_hat.period, self.kappa.period, rtol=0, atol=1e-12):
            raise ValueError("mu_hat and kappa must share the same period")
        if self.mu_hat.min() <= 0 or self.kappa.min() <= 0:
            raise ValueError("logistic coefficients must be positive")

    @property
    def period(self) -> float:
        return self.mu_hat.period

    def f(self, x, u):
        x, u = _check_finite(x, u)
        return self.mu_hat(x) * u * (self.kappa(x) - u)

    def linearization(self, x):
        x = np.asarray(x, dtype=float)
        return self.mu_hat(x) * self.kappa(x)

    def on_grid(self, x):
        m = self.mu_hat(x)
        k = self.kappa(x)
        return GridReaction(x, a=m * k, b=m, r=m * k)

    def upper_bound(self):
        return self.kappa.max()

    def lipschitz(self, u_max):
        m, k = self.mu_hat.samples, self.kappa.samples
        return float(np.max(m * np.maximum(np.abs(k), np.abs(k - 2 * u_max))))


@dataclass(frozen=True, eq=False)
class GeneralPeriodic(ReactionModel):
    """Tabulated ``f`` on an (x mod L, u) grid, bilinear interpolation.

    ``table[i, j]`` holds f(i L / nx, u_grid[j]); ``u_grid[0]`` must be 0 and
    the first column is forced to zero so that f(x, 0) = 0 holds exactly.
    Beyond the last u node the last segment is extended linearly.
    """

    period: float
    u_grid: np.ndarray
    table: np.ndarray
    fd_step: float = 1e-4
    kind = "GeneralPeriodic"

    def __post_init__(self):
        u_grid = np.asarray(self.u_grid, dtype=float)
        table = np.array(self.table, dtype=float)
        if table.ndim != 2 or table.shape[1] != u_grid.size:
            raise ValueError("table must have shape (nx, len(u_grid))")
        if u_grid[0] != 0 or np.any(np.diff(u_grid) <= 0):
            raise ValueError("u_grid must start at 0 and be strictly increasing")
        if not np.all(np.isfinite(table)):
            raise ValueError("table must be finite")
        table[:, 0] = 0.0
        object.__setattr__(self, "u_grid", u_grid)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_function(cls, func, period, nx, u_grid, **kw):
        # nodes at h/2 and h keep the difference quotient off the first chord
        x = np.arange(nx) * (period / nx)
        h = kw.get("fd_step", cls.fd_step)
        u_grid = np.union1d(np.asarray(u_grid, dtype=float), [h / 2, h])
        return cls(period, u_grid, func(x[:, None], u_grid[None, :]), **kw)

    @property
    def nx(self) -> int:
        return self.table.shape[0]

    def _x_weights(self, x):
        s = np.mod(x, self.period) / (self.period / self.nx)
        i = np.floor(s).astype(int)
        return i % self.nx, (i + 1) % self.nx, s - i

    def _u_interp(self, rows, u):
        ug = self.u_grid
        j = np.clip(np.searchsorted(ug, u, side="right") - 1, 0, ug.size - 2)
        w = (u - ug[j]) / (ug[j + 1] - ug[j])
        return (1 - w) * self.table[rows, j] + w * self.table[rows, j + 1]

    def _eval(self, x, u):
        i0, i1, wx = self._x_weights(x)
        return (1 - wx) * self._u_interp(i0, u) + wx * self._u_interp(i1, u)

    def f(self, x, u):
        x, u = _check_finite(x, u)
        x, u = np.broadcast_arrays(x, u)
        return self._eval(x, u)

    def linearization(self, x):
        # one-sided difference quotient f(x,h)/h with one Richardson step
        x = np.asarray(x, dtype=float)
        h = self.fd_step
        d1 = self._eval(x, np.full_like(x, h)) / h
        d2 = self._eval(x, np.full_like(x, h / 2)) / (h / 2)
        return 2 * d2 - d1

    def on_grid(self, x):
        i0, i1, wx = self._x_weights(x)

        def func(u):
            return (1 - wx) * self._u_interp(i0, u) + wx * self._u_interp(i1, u)

        return GridReaction(x, func=func, r=self.linearization(x))

    def upper_bound(self):
        fmax = self.table.max(axis=0)
        positive = np.nonzero(fmax >= 0)[0]
        j = positive[-1]
        if j == fmax.size - 1:
            return float(self.u_grid[-1])
        # zero crossing of the piecewise-linear upper envelope on [u_j, u_j+1]
        u0, u1 = self.u_grid[j], self.u_grid[j + 1]
        f0, f1 = fmax[j], fmax[j + 1]
        return float(u0 + f0 * (u1 - u0) / (f0 - f1))

    def lipschitz(self, u_max):
        slopes = np.abs(np.diff(self.table, axis=1) / np.diff(self.u_grid))
        keep = self.u_grid[:-1] <= u_max
        return float(slopes[:, keep].max())


@dataclass(frozen=True, eq=False)
class CloseToPeriodic(ReactionModel):
    """Periodic base plus ``amplitude * exp(-rho * max(x, 0)) * u``."""

    base: ReactionModel
    amplitude: float
    rho: float
    kind = "CloseToPeriodic"

    def __post_init__(self):
        if not self.base.is_periodic:
            raise ValueError("base of a close-to-periodic model must be periodic")
        if self.amplitude < 0 or not np.isfinite(self.amplitude):
            raise ValueError("perturbation amplitude C must be >= 0")
        if not self.rho > 0:
            raise ValueError("perturbation decay rate rho must be > 0")

    @property
    def period(self) -> float:
        return self.base.period

    @property
    def is_periodic(self) -> bool:
        return self.amplitude == 0

    def envelope(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-self.rho * np.maximum(x, 0.0))

    def f(self, x, u):
        x, u = _check_finite(x, u)
        return self.base.f(x, u) + self.envelope(x) * u

    def linearization(self, x):
        return self.base.linearization(x) + self.envelope(x)

    def on_grid(self, x):
        g = self.base.on_grid(x)
        e = self.envelope(x)
        if g.a is not None:
            return GridReaction(x, a=g.a + e, b=g.b, r=g.r + e)

        def func(u):
            return g.rate(u) + e * u

        return GridReaction(x, func=func, r=g.r + e)

    def linearization_field(self, n=128):
        if not self.is_periodic:
            raise ValueError("close-to-periodic model has no periodic linearization; "
                             "use the base model")
        return self.base.linearization_field(n)

    def upper_bound(self):
        if self.amplitude == 0:
            return self.base.upper_bound()
        # the perturbation is largest (= C) on x <= 0
        shifted = _Shifted(self.base, self.amplitude)
        return _positive_range(shifted, self.base.upper_bound() * 4 + self.amplitude + 1)

    def lipschitz(self, u_max):
        return self.base.lipschitz(u_max) + self.amplitude

    def satisfies_closeness(self, lambda_star: float) -> bool:
        """True when the perturbation decays at least like exp(-2 lambda* x)."""
        return self.rho >= 2 * lambda_star


class _Shifted:
    def __init__(self, base, c):
        self.base, self.c = base, c
        self.period = base.period

    def f(self, x, u):
        return self.base.f(x, u) + self.c * u


def _positive_range(model, s_hi, nx=64):
    """Largest s with max_x f(x, s) >= 0, by bisection on [0, s_hi]."""
    x = np.arange(nx) * (model.period / nx)

    def top(s):
        return np.max(model.f(x, np.full_like(x, s)))

    lo, hi = 0.0, s_hi
    while top(hi) >= 0:
        lo, hi = hi, 2 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if top(mid) >= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * hi:
            break
    return lo


# -- pointwise operations ---------------------------------------------------

def evaluate_f(model: ReactionModel, x, u):
    """Growth rate f(x, u); rejects non-finite input."""
    return model.f(x, u)


def linearization(model: ReactionModel, x):
    """r(x) = d/du f(x, 0)."""
    return model.linearization(x)


@dataclass
class KppReport:
    s_pairs: list
    gaps: np.ndarray
    passed: bool
    x_samples: int = 0
    notes: list = field(default_factory=list)

    @property
    def min_gap(self) -> float:
        return float(np.min(self.gaps))


def check_kpp(model: ReactionModel, s_grid, x_resolution: int = 256,
              x_range: tuple | None = None) -> KppReport:
    """Check that f(x, s)/s is strictly decreasing in s, uniformly in x.

    For each adjacent pair ``s1 < s2`` of ``s_grid`` the report holds
    ``min_x (f(x,s1)/s1 - f(x,s2)/s2)``. Periodic models are sampled on one
    cell; others on ``x_range`` (default ``[-5 L, 20 L]``).
    """
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or s.size < 2 or np.any(s <= 0) or np.any(np.diff(s) <= 0):
        raise ValueError("s_grid must be strictly increasing and positive")
    L = model.period
    if x_range is None:
        x_range = (0.0, L) if model.is_periodic else (-5 * L, 20 * L)
    x = np.linspace(x_range[0], x_range[1], x_resolution, endpoint=not model.is_periodic)
    ratio = np.stack([model.f(x, np.full_like(x, si)) / si for si in s])
    gaps = np.min(ratio[:-1] - ratio[1:], axis=1)
    passed = bool(np.all(gaps > 0))
    pairs = list(zip(s[:-1].tolist(), s[1:].tolist()))
    notes = [] if passed else [f"non-KPP: ratio gap <= 0 for pairs "
                               f"{[p for p, g in zip(pairs, gaps) if g <= 0]}"]
    return KppReport(pairs, gaps, passed, x.size, notes)
