"""Front observables: level crossings, hitting times, speeds, the log
shift, steepness, intersection counts and half-line distances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .search import golden_section


@dataclass(frozen=True)
class CrossingSeries:
    level: float
    times: np.ndarray
    positions: np.ndarray
    interpolated: bool = True

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.shape != x.shape:
            raise ValueError("times and positions must have the same shape")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(x)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)

    @classmethod
    def from_log(cls, level, records):
        """Build from ``FrontTracker`` records, dropping entries without a crossing."""
        t = np.array([r[0] for r in records], dtype=float)
        x = np.array([r[1] for r in records], dtype=float)
        keep = np.isfinite(x)
        return cls(level, t[keep], x[keep])

    def window(self, t1, t2):
        sel = (self.times >= t1) & (self.times <= t2)
        return self.times[sel], self.positions[sel]


@dataclass
class ShiftSeries:
    times: np.ndarray
    m: np.ndarray
    lag: np.ndarray
    a_fit: float
    a_stderr: float
    b_fit: float
    c_star: float
    t_burn: float

    @property
    def a_time(self) -> float:
        """Log coefficient in time units (a_fit / c*)."""
        return self.a_fit / self.c_star


def crossing_position(x, u, theta):
    """Rightmost crossing of ``theta``, linearly interpolated."""
    above = np.nonzero(u >= theta)[0]
    if above.size == 0:
        raise ValueError(f"level not attained: max u = {np.max(u):.6g} < {theta:.6g}")
    i = above[-1]
    if i == u.size - 1:
        raise ValueError("level not attained: u is above the level at the right boundary")
    return float(x[i] + (theta - u[i]) / (u[i + 1] - u[i]) * (x[i + 1] - x[i]))


def level_crossing(state, theta: float) -> float:
    return crossing_position(state.grid.x, state.u, theta)


def hitting_times(times, values, level):
    """First time each station reaches ``level``.

    ``values`` has shape (n_times, n_stations). Entries interpolate
    linearly in t; stations already at or above the level at the first
    sample get that time; stations never reached get NaN.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    out = np.full(values.shape[1], np.nan)
    for k in range(values.shape[1]):
        v = values[:, k]
        hit = np.nonzero(v >= level)[0]
        if hit.size == 0:
            continue
        j = hit[0]
        if j == 0:
            out[k] = times[0]
        else:
            w = (level - v[j - 1]) / (v[j] - v[j - 1])
            out[k] = times[j - 1] + w * (times[j] - times[j - 1])
    return out


def speed_estimate(series: CrossingSeries, window):
    """Least-squares slope of X(t) on ``window``; returns (c_hat, stderr)."""
    t, x = series.window(*window)
    if t.size < 10:
        raise ValueError(f"speed fit needs >= 10 points in window, got {t.size}")
    (slope, icpt), cov = np.polyfit(t, x, 1, cov=True)
    return float(slope), float(math.sqrt(cov[0, 0]))


def log_corrected_fit(series: CrossingSeries, window):
    """Fit ``X = c t - a log t + b``; returns (c, a, b)."""
    t, x = series.window(*window)
    if t.size < 10:
        raise ValueError(f"fit needs >= 10 points in window, got {t.size}")
    design = np.column_stack([t, -np.log(t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(design, x, rcond=None)
    return float(coef[0]), float(coef[1]), float(coef[2])


MIN_LOG_SPAN = 8.0


def shift_estimate(series: CrossingSeries, c_star, lambda_star, t_burn,
                   wobble=None, t_end=None, max_cond=1e12) -> ShiftSeries:
    """Fit ``X(t) = c* t - a log t + b`` on ``[t_burn, t_end]`` with c* fixed.

    ``wobble(t)`` is the periodic part of the reference front's crossing
    position, ``X_U(tau) - c* tau`` (zero by default); the time shift is
    ``m(t) = (c* t - X(t) + wobble(t)) / c*`` so that the crossing of u
    matches the crossing of ``U(t - m(t), .)``.
    """
    t_end = series.times[-1] if t_end is None else t_end
    t, x = series.window(t_burn, t_end)
    # ln t must vary enough to separate a from b; [50, 400] is the standard window
    if t.size < 3 or t[-1] < MIN_LOG_SPAN * max(t_burn, 1e-300) * (1 - 1e-9):
        raise ValueError(f"shift fit needs t_end >= {MIN_LOG_SPAN:g} t_burn "
                         "(close to a decade in t)")
    design = np.column_stack([-np.log(t), np.ones_like(t)])
    cond = np.linalg.cond(design)
    if cond > max_cond:
        raise ValueError(f"shift fit ill-conditioned (cond = {cond:.3g})")
    y = x - c_star * t
    coef, res, *_ = np.linalg.lstsq(design, y, rcond=None)
    a, b = float(coef[0]), float(coef[1])
    resid = y - design @ coef
    dof = max(t.size - 2, 1)
    cov = np.linalg.inv(design.T @ design) * float(resid @ resid) / dof
    w = np.zeros_like(t) if wobble is None else np.asarray(wobble(t), dtype=float)
    m = (c_star * t - x + w) / c_star
    return ShiftSeries(t, m, c_star * m, a, float(math.sqrt(cov[0, 0])), b, c_star, t_burn)


# -- steepness and intersections --------------------------------------------

def _signs(u1, u2, deadband):
    d = np.asarray(u1, dtype=float) - np.asarray(u2, dtype=float)
    s = np.sign(d)
    s[np.abs(d) <= deadband] = 0
    return s


def is_steeper(u1, u2, deadband: float = 1e-9) -> bool:
    """True when ``u1`` is steeper than ``u2`` on a common grid.

    Differences within ``deadband`` count as ties; among the remaining nodes
    the sign of ``u1 - u2`` must run ``+ ... + - ... -`` from left to right.
    """
    s = _signs(u1, u2, deadband)
    s = s[s != 0]
    return not np.any((s[:-1] < 0) & (s[1:] > 0))


def intersection_count(u1, u2, deadband: float = 1e-9) -> int:
    """Sign changes of ``u1 - u2``; a run of ties counts as one change at most."""
    s = _signs(u1, u2, deadband)
    s = s[s != 0]
    return int(np.count_nonzero(s[:-1] != s[1:]))


# -- distance to a reference front ------------------------------------------

def half_line_distance(state, profile, a: float, shift: float) -> float:
    """``sup_{x >= a} |u(t, x) - U(t - shift, x)|`` for the state's time t."""
    x = state.grid.x
    sel = x >= a
    ref = profile.value(state.t - shift, x[sel])
    return float(np.max(np.abs(state.u[sel] - ref)))


def optimal_shift(state, profile, a: float, guess: float | None = None,
                  half_width: float | None = None, tol: float = 1e-6):
    """Minimize the half-line distance over the time shift.

    The search covers ``guess +/- half_width`` (default two periods), where
    ``guess`` defaults to the shift predicted by the level crossings.
    Returns ``(distance, shift)``.
    """
    if guess is None:
        guess = crossing_shift(state, profile)
    half_width = 2 * profile.T if half_width is None else half_width

    def dist(m):
        return half_line_distance(state, profile, a, m)

    m, d = golden_section(dist, guess - half_width, guess + half_width, tol=tol)
    return d, m


def crossing_shift(state, profile) -> float:
    """Time shift m with the crossing of ``U(t - m)`` at the crossing of u."""
    x_u = level_crossing(state, profile.level)
    s = (x_u - profile.crossing_offset(0.0)) / profile.c
    # one fixed-point pass to include the periodic wobble
    s = (x_u - profile.crossing_offset(s)) / profile.c
    return state.t - s
