"""Pulsating traveling fronts extracted from long-time Cauchy runs.

A front of speed c satisfies ``U(t + T, x) = U(t, x - L)`` with ``T = L / c``.
The profile keeps ``n_phase`` snapshots over one period on a window of the
run grid, time-anchored so that ``U(0, 0) = p(0) / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from . import solver
from .coefficients import PeriodicField, ReactionModel
from .diagnostics import CrossingSeries, crossing_position, speed_estimate
from .floquet import DispersionData, lambda_roots


class FrontError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class FrontProfile:
    c: float
    period: float
    dt: float
    steps_per_phase: int
    x: np.ndarray
    phases: np.ndarray
    p_window: np.ndarray
    p0: float
    p_norm: float
    lambda_c: float | None = None
    phi_c: PeriodicField | None = None
    lambda_fit: float = math.nan
    B_c: float = math.nan
    measured_speed: float = math.nan
    convergence_residual: float = math.nan
    t_anchor: float = math.nan

    @property
    def T(self) -> float:
        return self.period / self.c

    @property
    def n_phase(self) -> int:
        return self.phases.shape[0]

    @property
    def level(self) -> float:
        return self.p0 / 2

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def cells(self) -> int:
        return int(round(self.period / self.dx))

    def phase_times(self) -> np.ndarray:
        return np.arange(self.n_phase) * (self.T / self.n_phase)

    def _phase_at(self, j, y):
        # U(tau_j, y) on grid-aligned positions y; p on the left, 0 on the right
        if j == self.n_phase:
            return self._phase_at(0, y - self.period)
        idx = np.rint((y - self.x[0]) / self.dx).astype(np.int64)
        nw = self.x.size
        out = np.zeros(y.shape)
        inside = (idx >= 0) & (idx < nw)
        out[inside] = self.phases[j][idx[inside]]
        left = idx < 0
        if np.any(left):
            q = self.cells
            out[left] = self.p_window[np.mod(idx[left], q)]
        right = idx >= nw
        if np.any(right) and self.phases[j][-1] > 1e-6 * self.p_norm:
            raise ValueError("profile window too narrow for requested range "
                             f"(U = {self.phases[j][-1]:.3g} at the right edge)")
        return out

    def value(self, s: float, x) -> np.ndarray:
        """``U(s, x)`` for grid-aligned ``x``, by the identity
        ``U(s, x) = U(s - n T, x - n L)`` and linear interpolation between phases."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        off = (x - self.x[0]) / self.dx
        if np.max(np.abs(off - np.rint(off))) > 1e-6:
            raise ValueError("positions are not aligned with the profile grid")
        n = math.floor(s / self.T)
        tau = s - n * self.T
        pos = tau / (self.T / self.n_phase)
        j = min(int(math.floor(pos)), self.n_phase - 1)
        w = pos - j
        y = x - n * self.period
        if w <= 1e-12:
            return self._phase_at(j, y)
        return (1 - w) * self._phase_at(j, y) + w * self._phase_at(j + 1, y)

    def crossing_positions(self) -> np.ndarray:
        return np.array([crossing_position(self.x, ph, self.level) for ph in self.phases])

    def crossing_offset(self, s) -> np.ndarray:
        """Periodic part of the crossing position, ``X_U(s) - c s``."""
        tj = self.phase_times()
        wob = self.crossing_positions() - self.c * tj
        tau = np.mod(np.asarray(s, dtype=float), self.T)
        return np.interp(tau, np.append(tj, self.T), np.append(wob, wob[0]))

    def stepper(self, model: ReactionModel, scheme: solver.SchemeConfig | None = None):
        scheme = scheme or solver.SchemeConfig(self.dt, 1.0, "dirichlet_p", "dirichlet_zero")
        return solver.Stepper(self.x, model, scheme, p_left=self.p_window[0])


def _time_step(c, period, dx, n_phase, dt=None):
    dt0 = 0.25 * dx if dt is None else dt
    T = period / c
    m = max(1, math.ceil(T / (n_phase * dt0) - 1e-9))
    return T / (n_phase * m), m


def _anchor(stepper, u, t, dt, idx, theta, max_steps):
    """Step until ``u[idx]`` reaches theta, then hit it exactly with one
    fractional step. Returns (u_anchor, t_anchor)."""
    for _ in range(max_steps):
        new = stepper.advance(u, dt, t + dt)
        if new[idx] >= theta:
            break
        u, t = new, t + dt
    else:
        raise FrontError("front did not reach the anchor station")
    if u[idx] >= theta:
        return u, t
    delta = brentq(lambda h: stepper.advance(u, h)[idx] - theta, 0.0, dt,
                   xtol=1e-15, rtol=4 * np.finfo(float).eps)
    u_a = stepper.advance(u, delta)
    u_a[idx] = theta if abs(u_a[idx] - theta) < 1e-12 else u_a[idx]
    return u_a, t + delta


def _phases(stepper, u, dt, n_phase, m):
    out = [u.copy()]
    for j in range(n_phase):
        for _ in range(m):
            u = stepper.advance(u, dt)
        out.append(u.copy())
    return out          # n_phase + 1 snapshots, the last one at t + T


def compute_front(model: ReactionModel, c: float, disp: DispersionData,
                  points_per_period: int = 32, horizon: float | None = None,
                  n_phase: int = 16, tol_front: float = 1e-3,
                  window=(-40.0, 60.0), x_left: float = -20.0,
                  dt: float | None = None) -> FrontProfile:
    """Pulsating front of speed ``c >= c*`` from a long Cauchy run.

    ``c = c*`` starts from ``H(-x) p(x)``; ``c > c*`` from
    ``min(p, phi_{lambda_c} e^{-lambda_c x})``. The run stops once
    ``max |u(t + T, x) - u(t, x - L)| <= tol_front * max p`` over one period;
    failure to do so by ``horizon`` raises :class:`FrontError`.
    """
    cs = disp.c_star
    if c < cs - 1e-9:
        raise ValueError(f"no pulsating wave below minimal speed (c = {c:.6g} < c* = {cs:.6g})")
    critical = c <= cs + 1e-9
    if critical:
        c = cs
    L = model.period
    if horizon is None:
        horizon = 400.0 if critical else 200.0
    dx = L / points_per_period
    dt, m = _time_step(c, L, dx, n_phase, dt)
    T = L / c
    z_lo, z_hi = window
    x_max = c * horizon + z_hi + 6 * math.sqrt(horizon) + 10 * L
    grid = solver.Grid.for_period(x_left, math.ceil(x_max / L) * L, L, points_per_period)
    x = grid.x
    stat = solver.stationary_upper(model, x)
    p = stat.values
    lam_c = phi = None
    if critical:
        u = solver.heaviside(x, 0.0, p)
        lam_c = disp.lambda_star
    else:
        lam_c, _ = lambda_roots(disp, c)
        phi = disp.phi(lam_c)
        u = solver.exp_tail(x, 1.0, lam_c, p, phi)
    scheme = solver.SchemeConfig(dt, 1.0, "dirichlet_p", "dirichlet_zero")
    stepper = solver.Stepper(x, model, scheme, p_left=p[0])
    cells = int(round(L / dx))
    margin = 10 * cells
    p_norm = float(p.max())
    min_time = max(20 * T, 50.0, (abs(z_lo) + x_left + 5 * L) / c)
    steps_period = n_phase * m

    t = 0.0
    theta_track = stat.at(0.0) / 2
    track_t, track_x = [], []
    residual = math.inf
    u_prev = u
    while True:
        for _ in range(steps_period):
            u = stepper.advance(u, dt, t)
        t += T
        track_t.append(t)
        track_x.append(crossing_position(x, u, theta_track))
        residual = float(np.max(np.abs(u[margin + cells:-margin] - u_prev[margin:-margin - cells])))
        u_prev = u
        if t >= min_time and residual <= tol_front * p_norm:
            break
        if t >= horizon:
            raise FrontError(f"shape did not converge by t = {horizon:g}: "
                             f"last periodicity residual {residual:.3e} "
                             f"> {tol_front * p_norm:.3e}")

    # anchor at the first station ahead of the current crossing
    k = math.floor(track_x[-1] / L) + 1
    idx = grid.index_of(k * L)
    p0 = float(p[idx])
    theta = p0 / 2
    u_a, t_a = _anchor(stepper, u, t, dt, idx, theta, 4 * steps_period)
    snaps = _phases(stepper, u_a, dt, n_phase, m)
    i0, i1 = grid.index_of(k * L + z_lo), grid.index_of(k * L + z_hi)
    if i0 < 1 or i1 > grid.n_points - 2:
        raise FrontError("profile window does not fit in the run domain; increase horizon")
    sl = slice(i0, i1 + 1)
    xw = x[sl] - k * L
    conv = float(np.max(np.abs(snaps[-1][i0 + cells:i1 + 1] - snaps[0][i0:i1 + 1 - cells])))

    # one crossing per period removes the wobble; fit the converged stretch only
    tail = max(10, len(track_t) // 4)
    series = CrossingSeries(theta_track, np.array(track_t[-tail:]), np.array(track_x[-tail:]))
    speed, _ = speed_estimate(series, (series.times[0], series.times[-1]))

    prof = FrontProfile(c=c, period=L, dt=dt, steps_per_phase=m, x=xw,
                        phases=np.array([s[sl] for s in snaps[:-1]]),
                        p_window=p[sl].copy(), p0=p0, p_norm=p_norm,
                        lambda_c=lam_c, phi_c=phi if phi is not None else disp.phi(lam_c),
                        measured_speed=float(speed), convergence_residual=conv,
                        t_anchor=t_a)
    if not critical:
        try:
            lam_fit, b_c = tail_fit(prof)
            prof = replace(prof, lambda_fit=lam_fit, B_c=b_c)
        except ValueError:
            pass
    return prof


def reanchor(profile: FrontProfile, model: ReactionModel) -> FrontProfile:
    """Shift the profile in time so that ``U(0, 0) = p(0) / 2``.

    An already anchored profile is returned unchanged.
    """
    theta = profile.level
    if abs(profile.value(0.0, [0.0])[0] - theta) <= 1e-12 * profile.p_norm:
        return profile
    stepper = profile.stepper(model)
    cells = profile.cells
    n, m = profile.n_phase, profile.steps_per_phase
    for k in (0, 1, 2, -1):
        idx = int(round((k * profile.period - profile.x[0]) / profile.dx))
        vals = [profile._phase_at(j, np.array([k * profile.period]))[0] for j in range(n + 1)]
        for j in range(n):
            if vals[j] < theta <= vals[j + 1]:
                u0 = profile.phases[j].copy()
                u_a, _ = _anchor(stepper, u0, 0.0, profile.dt, idx, theta, m + 1)
                snaps = _phases(stepper, u_a, profile.dt, n, m)
                return replace(profile, x=profile.x - k * profile.period,
                               phases=np.array(snaps[:-1]),
                               p_window=profile.p_window.copy())
    raise FrontError("anchor level not crossed within one period at stations 0..2")


def periodicity_residual(profile: FrontProfile, model: ReactionModel,
                         scheme: solver.SchemeConfig | None = None,
                         margin_periods: int = 2) -> float:
    """Re-evolve phase 0 for one period T and return
    ``sup |u(T, x) - u(0, x - L)|`` over the window interior."""
    stepper = profile.stepper(model, scheme)
    dt = stepper.scheme.dt
    n_steps = int(round(profile.T / dt))
    u = profile.phases[0].copy()
    if not np.any(u):
        return 0.0
    t = 0.0
    for k in range(n_steps):
        h = dt if k < n_steps - 1 else profile.T - t
        u = stepper.advance(u, h)
        t += h
    cells = profile.cells
    lo = margin_periods * cells
    hi = u.size - margin_periods * cells
    return float(np.max(np.abs(u[lo + cells:hi] - profile.phases[0][lo:hi - cells])))


def tail_fit(profile: FrontProfile, window=None, phi: PeriodicField | None = None,
             full: bool = False):
    """Fit ``U(0, z) ~ B_c exp(-lambda z) phi(z)`` on the right tail.

    Returns ``(lambda_fit, B_c)`` (plus the rms log residual when ``full``).
    The default window is where ``1e-8 < U < 1e-2 max p`` right of the anchor.
    """
    phi = profile.phi_c if phi is None else phi
    u = profile.phases[0]
    z = profile.x
    if window is None:
        ok = (z > 0) & (u < 1e-2 * profile.p_norm) & (u > 1e-8)
        ok &= z < z[-1] - 2 * profile.period
        if np.count_nonzero(ok) < 10:
            raise ValueError("tail underflow; shrink window")
        sel = ok
    else:
        sel = (z >= window[0]) & (z <= window[1])
        if np.count_nonzero(sel) < 3:
            raise ValueError("tail window holds fewer than 3 nodes")
    if np.any(u[sel] <= 1e-290):
        raise ValueError("tail underflow; shrink window")
    q = u[sel] / (phi(z[sel]) if phi is not None else 1.0)
    slope, icpt = np.polyfit(z[sel], np.log(q), 1)
    lam, b = float(-slope), float(np.exp(icpt))
    if full:
        res = np.log(q) - (slope * z[sel] + icpt)
        return lam, b, float(np.sqrt(np.mean(res**2)))
    return lam, b
