"""Scalar bracketing searches shared by the dispersion and shift fits."""
import math

INV_PHI = (math.sqrt(5) - 1) / 2      # 1 / phi
INV_PHI2 = (3 - math.sqrt(5)) / 2     # 1 / phi^2


def golden_section(f, a, b, tol=1e-8, max_iter=200):
    """Minimize a unimodal ``f`` on ``[a, b]``.

    Returns ``(x_min, f(x_min))`` with the bracket shrunk below ``tol``.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if h <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            h = INV_PHI * h
            c = a + INV_PHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = INV_PHI * h
            d = a + INV_PHI * h
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def bisect(g, lo, hi, xtol=1e-15, max_iter=200):
    """Root of ``g`` on ``[lo, hi]`` where ``g(lo)`` and ``g(hi)`` differ in sign."""
    glo, ghi = g(lo), g(hi)
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    if (glo > 0) == (ghi > 0):
        raise ValueError(f"root not bracketed: g({lo})={glo}, g({hi})={ghi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo <= xtol * max(1.0, abs(mid)):
            break
    # return the endpoint with the smaller residual
    return lo if abs(glo) <= abs(g(hi)) else hi
