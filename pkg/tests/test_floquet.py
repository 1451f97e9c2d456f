import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from kpplab.coefficients import PeriodicField
from kpplab.floquet import (EigenError, degeneracy_exponent, lambda_roots, minimal_speed,
                            mu_slope_exact, principal_eigen, tangency_residual)

from oracles import (dense_fd_mu, fourier_mu, fourier_speed, homogeneous_degeneracy_fit,
                     homogeneous_roots)


def cosine_r(x):
    return 1 + 0.5 * np.cos(2 * np.pi * x)


@pytest.fixture(scope="module")
def cos_field():
    return PeriodicField.from_function(cosine_r, 1.0, 128)


@pytest.fixture(scope="module")
def cos_disp(cos_field):
    return minimal_speed(cos_field)


@pytest.fixture(scope="module")
def flat_disp():
    return minimal_speed(PeriodicField.constant(1.0))


# -- principal_eigen ---------------------------------------------------------------

@pytest.mark.parametrize("lam", [0.0, 2.0])
def test_homogeneous_eigenpair(lam):
    pair = principal_eigen(PeriodicField.constant(1.0), lam, 64)
    assert pair.mu == pytest.approx(-1.0, abs=1e-10)
    np.testing.assert_allclose(pair.phi.samples, 1.0, atol=1e-10)


def test_cosine_mu0_against_dense_eigensolve(cos_field):
    mu = principal_eigen(cos_field, 0.0, 256).mu
    assert mu == pytest.approx(dense_fd_mu(cosine_r, 0.0, 4096), abs=1e-6)


@pytest.mark.parametrize("lam", [0.3, 1.0, 2.5])
def test_mu_matches_fourier_oracle(cos_field, lam):
    assert principal_eigen(cos_field, lam, 256).mu == pytest.approx(
        fourier_mu(cosine_r, lam), abs=2e-6)


@pytest.mark.parametrize("lam", [0.0, 0.7, 3.0])
def test_eigenpair_invariants(cos_field, lam):
    pair = principal_eigen(cos_field, lam, 128)
    assert pair.phi.samples.min() > 0
    assert pair.phi.samples.max() == 1.0
    assert pair.residual <= 1e-8 * 1.5


def test_dense_and_shift_invert_agree(cos_field):
    a = principal_eigen(cos_field, 1.0, 128, method="dense")
    b = principal_eigen(cos_field, 1.0, 128, method="shift_invert")
    assert a.mu == pytest.approx(b.mu, abs=1e-10)
    np.testing.assert_allclose(a.phi.samples, b.phi.samples, atol=1e-8)


def test_small_cell_rejected(cos_field):
    with pytest.raises(ValueError):
        principal_eigen(cos_field, 0.0, 16)
    with pytest.raises(EigenError):
        principal_eigen(cos_field, 1000.0, 64, method="shift_invert")


def test_grid_convergence_order(cos_field):
    exact = fourier_mu(cosine_r, 0.8)
    errs = [abs(principal_eigen(cos_field, 0.8, n).mu - exact) for n in (32, 64, 128)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.8)


def test_homogeneous_mu_constant_in_lambda():
    r = PeriodicField.constant(1.0)
    mus = [principal_eigen(r, lam, 64).mu for lam in (0.0, 0.1, 1.0, 5.0)]
    np.testing.assert_allclose(mus, -1.0, atol=1e-10)


# -- minimal_speed ---------------------------------------------------------------

@pytest.mark.parametrize("level,cs,ls", [(1.0, 2.0, 1.0), (4.0, 4.0, 2.0)])
def test_minimal_speed_homogeneous(level, cs, ls):
    d = minimal_speed(PeriodicField.constant(level))
    assert d.c_star == pytest.approx(cs, abs=1e-8)
    assert d.lambda_star == pytest.approx(ls, abs=1e-6)
    assert d.mu_zero == pytest.approx(-level, abs=1e-10)


def test_minimal_speed_cosine_against_fourier(cos_disp):
    cs, ls = fourier_speed(cosine_r)
    assert cos_disp.c_star == pytest.approx(cs, abs=1e-4)
    assert cos_disp.lambda_star == pytest.approx(ls, abs=1e-3)


def test_curve_consistent(cos_disp):
    np.testing.assert_allclose(cos_disp.c_values,
                               (cos_disp.lambdas**2 - cos_disp.mu) / cos_disp.lambdas)
    assert cos_disp.c_star <= cos_disp.c_values.min() + 1e-12
    assert cos_disp.c_of(cos_disp.lambda_star) == cos_disp.c_star


def test_minimal_speed_rejects_stable_zero():
    with pytest.raises(ValueError, match="zero not linearly unstable"):
        minimal_speed(PeriodicField.constant(-0.5))


def test_minimal_speed_reports_scan_range():
    with pytest.raises(ValueError, match="scan range"):
        minimal_speed(PeriodicField.constant(1.0), lam_range=(2.0, 5.0), n_scan=21)


def test_tangency_identity(cos_disp, flat_disp):
    for d in (cos_disp, flat_disp):
        assert abs(tangency_residual(d)) <= 1e-3 * d.c_star


def test_exact_slope_matches_finite_difference(cos_field):
    h = 1e-5
    fd = (principal_eigen(cos_field, 1.0 + h, 128).mu
          - principal_eigen(cos_field, 1.0 - h, 128).mu) / (2 * h)
    assert mu_slope_exact(cos_field, 1.0, 128) == pytest.approx(fd, abs=1e-6)


# -- lambda_roots ----------------------------------------------------------------

def test_roots_homogeneous(flat_disp):
    lo, hi = lambda_roots(flat_disp, 2.5)
    assert (lo, hi) == pytest.approx(homogeneous_roots(2.5), abs=1e-9)
    assert (lo, hi) == pytest.approx((0.5, 2.0), abs=1e-9)
    assert lambda_roots(flat_disp, flat_disp.c_star) == (flat_disp.lambda_star,) * 2


def test_roots_subcritical(flat_disp):
    with pytest.raises(ValueError, match="subcritical"):
        lambda_roots(flat_disp, 1.5)


def test_roots_cosine(cos_disp):
    c = cos_disp.c_star + 0.1
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        lo, hi = lambda_roots(cos_disp, c)
    assert lo < cos_disp.lambda_star < hi
    for lam in (lo, hi):
        assert abs(cos_disp.g(lam, c)) <= 1e-10 * max(1, c * c)
    # same roots from the Fourier eigenvalue, up to the discretization gap
    g = lambda lam: lam**2 - fourier_mu(cosine_r, lam) - c * lam
    ls = cos_disp.lambda_star
    assert lo == pytest.approx(brentq(g, 1e-3, ls), abs=1e-5)
    assert hi == pytest.approx(brentq(g, ls, 4 * ls), abs=1e-5)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 2.0), st.floats(0.01, 2.0))
def test_roots_monotone_in_speed(cos_disp, d1, d2):
    if abs(d1 - d2) < 1e-3:
        return
    d1, d2 = sorted((d1, d2))
    l1, _ = lambda_roots(cos_disp, cos_disp.c_star + d1)
    l2, _ = lambda_roots(cos_disp, cos_disp.c_star + d2)
    assert l2 < l1 < cos_disp.lambda_star


# -- degeneracy_exponent ---------------------------------------------------------

def test_degeneracy_homogeneous_matches_closed_form(flat_disp):
    offsets = np.geomspace(1e-4, 1e-1, 7)
    n, k = degeneracy_exponent(flat_disp, offsets)
    n_ref, k_ref = homogeneous_degeneracy_fit(offsets)
    assert n == pytest.approx(n_ref, abs=1e-3)
    assert k == pytest.approx(k_ref, rel=1e-2)


def test_degeneracy_homogeneous_asymptotic(flat_disp):
    n, k = degeneracy_exponent(flat_disp, np.geomspace(1e-8, 1e-6, 5))
    assert n == pytest.approx(2.0, abs=1e-3)
    assert k == pytest.approx(1.0, abs=1e-2)


def test_degeneracy_cosine(cos_disp):
    n, _ = degeneracy_exponent(cos_disp, np.geomspace(1e-6, 1e-3, 5))
    assert n == pytest.approx(2.0, abs=0.05)


def test_degeneracy_needs_two_decades(flat_disp):
    with pytest.raises(ValueError, match="two decades"):
        degeneracy_exponent(flat_disp, [1e-3, 2e-3, 5e-3])
