"""Periodic principal eigenvalues and the KPP dispersion relation.

For the drifted periodic operator

    A_lambda phi = -phi'' + 2 lambda phi' - r(x) phi

the principal eigenvalue mu(lambda) is the eigenvalue of minimal real part;
its eigenfunction is positive. The minimal front speed is

    c* = min_{lambda > 0} (lambda^2 - mu(lambda)) / lambda.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .coefficients import PeriodicField
from .search import bisect, golden_section

TOL_EIG = 1e-8


class EigenError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenPair:
    lam: float
    mu: float
    phi: PeriodicField
    residual: float


def operator_matrix(r_samples: np.ndarray, period: float, lam: float, sparse=False):
    """Central-difference matrix of ``-D^2 + 2 lam D - diag(r)`` on one
    periodic cell (second order in h = L/n)."""
    n = r_samples.size
    h = period / n
    diag = 2.0 / h**2 - r_samples
    upper = -1.0 / h**2 + lam / h
    lower = -1.0 / h**2 - lam / h
    m = scipy.sparse.diags(
        [np.full(n - 1, lower), diag, np.full(n - 1, upper), [upper], [lower]],
        [-1, 0, 1, -(n - 1), n - 1], format="csc")
    return m if sparse else m.toarray()


def _perron_dense(a):
    w, v = np.linalg.eig(a)
    best = None
    for k in np.argsort(w.real):
        vec = v[:, k]
        vec = vec / vec[np.argmax(np.abs(vec))]
        if np.max(np.abs(vec.imag)) > 1e-8 or abs(w[k].imag) > 1e-8 * max(1, abs(w[k])):
            continue
        vec = vec.real
        margin = vec.min()
        if margin <= 0:
            continue
        if best is None:
            best = (w[k].real, vec, margin)
        elif np.isclose(w[k].real, best[0], rtol=1e-10, atol=1e-12):
            if margin > best[2]:
                best = (w[k].real, vec, margin)
        else:
            break
    if best is None:
        raise EigenError("no Perron pair at requested resolution")
    return best[0], best[1]


def _perron_shift_invert(a_sparse, r_max, max_iter=500, transpose=False):
    # A - sigma I is a strictly diagonally dominant M-matrix when lam*h <= 1,
    # so its inverse is positive and power iteration finds the Perron pair.
    n = a_sparse.shape[0]
    sigma = -r_max - 1.0
    shifted = (a_sparse - sigma * scipy.sparse.identity(n, format="csc"))
    shifted = (shifted.T if transpose else shifted).tocsc()
    if n <= 1024:
        lu = scipy.linalg.lu_factor(shifted.toarray())
        solve = lambda b: scipy.linalg.lu_solve(lu, b)
    else:
        solve = scipy.sparse.linalg.splu(shifted).solve
    v = np.ones(n)
    rho = 1.0
    for _ in range(max_iter):
        w = solve(v)
        rho = w.max()
        w = w / rho
        delta = np.max(np.abs(w - v))
        v = w
        if delta < 1e-15:
            break
    if v.min() <= 0:
        raise EigenError("no Perron pair at requested resolution")
    return sigma + 1.0 / rho, v


def principal_eigen(r: PeriodicField, lam: float, n_cell: int | None = None,
                    method: str = "auto") -> EigenPair:
    """Principal eigenpair of ``-phi'' + 2 lam phi' - r phi = mu phi``.

    ``method="dense"`` computes the full spectrum and keeps the eigenvalue
    of minimal real part with a constant-sign eigenvector. ``"shift_invert"``
    runs power iteration on the positive resolvent, valid while
    ``lam * h <= 1``. ``"auto"`` picks shift-invert when valid.
    The eigenvector is normalized to ``max phi = 1``.
    """
    n = n_cell or max(r.n, 128)
    if n < 32:
        raise ValueError("n_cell must be >= 32")
    rs = r.resample(n).samples
    h = r.period / n
    m_matrix = abs(lam) * h <= 1.0
    if method == "auto":
        method = "shift_invert" if m_matrix else "dense"
    if method == "shift_invert" and not m_matrix:
        raise EigenError("shift_invert needs |lam| * h <= 1; refine n_cell")
    a = operator_matrix(rs, r.period, lam, sparse=True)
    if method == "shift_invert":
        mu, phi = _perron_shift_invert(a, float(rs.max()))
    elif method == "dense":
        mu, phi = _perron_dense(a.toarray())
    else:
        raise ValueError(f"unknown method {method!r}")
    phi = phi / phi.max()
    residual = float(np.max(np.abs(a @ phi - mu * phi)))
    if residual > TOL_EIG * max(1.0, np.max(np.abs(rs))):
        raise EigenError(f"eigen residual {residual:.3e} above tolerance")
    return EigenPair(float(lam), float(mu), PeriodicField(r.period, phi), residual)


@dataclass
class DispersionData:
    """Sampled dispersion curve plus the minimal speed and its decay rate."""

    r: PeriodicField
    n_cell: int
    lambdas: np.ndarray
    mu: np.ndarray
    c_values: np.ndarray
    c_star: float
    lambda_star: float
    mu_zero: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def period(self) -> float:
        return self.r.period

    def eigen(self, lam: float) -> EigenPair:
        key = float(lam)
        if key not in self._cache:
            self._cache[key] = principal_eigen(self.r, key, self.n_cell)
        return self._cache[key]

    def mu_of(self, lam: float) -> float:
        return self.eigen(lam).mu

    def c_of(self, lam: float) -> float:
        return (lam**2 - self.mu_of(lam)) / lam

    def phi(self, lam: float) -> PeriodicField:
        return self.eigen(lam).phi

    def g(self, lam: float, c: float) -> float:
        """lam^2 - mu(lam) - c lam; zero at the decay rates of speed c."""
        return lam**2 - self.mu_of(lam) - c * lam


def _mu_many(r, lambdas, n_cell, threads):
    def one(lam):
        return principal_eigen(r, lam, n_cell).mu

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.array(list(pool.map(one, lambdas)))
    return np.array([one(lam) for lam in lambdas])


def minimal_speed(r: PeriodicField, tol: float = 1e-8, lam_range=None,
                  n_scan: int = 161, n_cell: int | None = None,
                  threads: int = 1) -> DispersionData:
    """Minimal speed c* and decay rate lambda*.

    Coarse scan of c(lambda) on a log grid, golden-section refinement around
    the best grid point, then bisection on the stationarity condition of
    c(lambda) to recover digits lost on the flat minimum.
    """
    n_cell = n_cell or max(r.n, 128)
    L = r.period
    lo, hi = lam_range if lam_range is not None else (1e-3 / L, 20.0 / L)
    mu0 = principal_eigen(r, 0.0, n_cell).mu
    if mu0 >= 0:
        raise ValueError(f"zero not linearly unstable: mu(0) = {mu0:.6g} >= 0")
    lambdas = np.geomspace(lo, hi, n_scan)
    mu = _mu_many(r, lambdas, n_cell, threads)
    c_values = (lambdas**2 - mu) / lambdas
    i = int(np.argmin(c_values))
    if i == 0 or i == n_scan - 1:
        raise ValueError(f"no interior minimum of c(lambda) in scan range "
                         f"[{lo:.3g}, {hi:.3g}] (minimum at the "
                         f"{'lower' if i == 0 else 'upper'} end); widen lam_range")
    disp = DispersionData(r, n_cell, lambdas, mu, c_values, np.nan, np.nan, mu0)
    lam_star, _ = golden_section(disp.c_of, lambdas[i - 1], lambdas[i + 1], tol=tol)
    # golden section stalls near sqrt(machine eps) on the flat minimum
    if lambdas[i + 1] * L / n_cell <= 1.0:
        lam_star = _polish_lambda_star(disp, lam_star, max(10 * tol, 1e-6 * lam_star))
    disp.lambda_star = float(lam_star)
    disp.c_star = float(disp.c_of(lam_star))
    return disp


def lambda_roots(disp: DispersionData, c: float):
    """The two positive roots of ``lam^2 - mu(lam) - c lam = 0`` for c >= c*.

    Returns ``(lambda_minus, lambda_plus)`` with lambda_minus <= lambda*
    <= lambda_plus; at ``c = c*`` both equal lambda*.
    """
    cs, ls = disp.c_star, disp.lambda_star
    snap = 1e-12 * max(1.0, cs)
    if c < cs - snap:
        raise ValueError(f"subcritical speed has no real decay rates (c={c} < c*={cs})")
    if c <= cs + snap:
        return ls, ls

    def g(lam):
        if lam == ls:
            return ls * (cs - c)
        return disp.g(lam, c)

    tiny = 1e-12 * ls
    lam_minus = bisect(g, tiny, ls)
    hi = 2 * ls
    while g(hi) <= 0:
        hi *= 2
        if hi > 1e6 * ls:
            raise RuntimeError("upper decay rate not bracketed")
    lam_plus = bisect(g, ls, hi)
    limit = 1e-10 * max(1.0, c * c)
    for lam in (lam_minus, lam_plus):
        if abs(g(lam)) > limit:
            warnings.warn(f"root residual |g({lam:.6g})| = {abs(g(lam)):.2e} exceeds {limit:.1e}")
    return lam_minus, lam_plus


def degeneracy_exponent(disp: DispersionData, offsets):
    """Fit ``c - c* ~ K (lambda* - lambda_c)^N`` on a log-log least squares.

    Returns ``(N_fit, K_fit)``.
    """
    offsets = np.asarray(offsets, dtype=float)
    if np.any(offsets <= 0):
        raise ValueError("offsets must be positive")
    if offsets.max() / offsets.min() < 100:
        raise ValueError("offsets must span at least two decades")
    if np.any(offsets >= disp.c_star / 2):
        raise ValueError("offsets must stay below c*/2")
    eps, dc = [], []
    for d in offsets:
        lam_c, _ = lambda_roots(disp, disp.c_star + d)
        e = disp.lambda_star - lam_c
        if e > 0 and np.isfinite(e):
            eps.append(e)
            dc.append(d)
    if len(eps) < 3:
        raise ValueError(f"only {len(eps)} usable points for the exponent fit; need 3")
    slope, intercept = np.polyfit(np.log(eps), np.log(dc), 1)
    return float(slope), float(np.exp(intercept))


def mu_slope_exact(r: PeriodicField, lam: float, n_cell: int) -> float:
    """d mu / d lambda from left and right Perron vectors (first-order
    perturbation of the discrete operator)."""
    rs = r.resample(n_cell).samples
    h = r.period / n_cell
    a = operator_matrix(rs, r.period, lam, sparse=True)
    _, phi = _perron_shift_invert(a, float(rs.max()))
    _, psi = _perron_shift_invert(a, float(rs.max()), transpose=True)
    d_phi = (np.roll(phi, -1) - np.roll(phi, 1)) / h
    return float(psi @ d_phi / (psi @ phi))


def _polish_lambda_star(disp: DispersionData, lam0: float, width: float) -> float:
    # c'(lam) = 0  <=>  lam^2 - lam mu'(lam) + mu(lam) = 0
    def stationarity(lam):
        return lam**2 - lam * mu_slope_exact(disp.r, lam, disp.n_cell) + disp.mu_of(lam)

    lo, hi = lam0 - width, lam0 + width
    for _ in range(30):
        if stationarity(lo) < 0 < stationarity(hi):
            return bisect(stationarity, lo, hi)
        width *= 2
        lo, hi = max(lam0 - width, 0.5 * lam0), lam0 + width
    return lam0


def mu_derivative(disp: DispersionData, lam: float, h: float = 1e-4) -> float:
    return (disp.mu_of(lam + h) - disp.mu_of(lam - h)) / (2 * h)


def tangency_residual(disp: DispersionData, h: float = 1e-4) -> float:
    """``2 lambda* - c* - mu'(lambda*)``; vanishes at the minimizer."""
    return 2 * disp.lambda_star - disp.c_star - mu_derivative(disp, disp.lambda_star, h)


def dispersion_for(model, n_cell: int = 128, **kw) -> DispersionData:
    """Dispersion data of a periodic reaction model's linearization."""
    return minimal_speed(model.linearization_field(n_cell), n_cell=n_cell, **kw)
