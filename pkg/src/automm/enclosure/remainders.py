"""Remainder intervals for elementary functions.

For a function g, a center z0 and a range [zlo, zhi] containing z0,
an admissible remainder interval I satisfies

    g(z) = T_{k-1}(z; z0) + R(z) (z - z0)^k   with   R(z) in I

for every z in the range, where T_{k-1} is the degree k-1 Taylor
polynomial and R is the scaled remainder (R(z0) taken as the limit
g^(k)(z0)/k!).

Two methods are provided:

* ``lagrange``: interval range of g^(k)/k! over [zlo, zhi].  The k-th
  derivatives of softplus/sigmoid are polynomials in u = sigmoid(z),
  whose exact range over a u-interval comes from their (precomputed)
  critical points; naive interval evaluation would be far too loose.
* ``sharp``: endpoint evaluation of R at zlo and zhi in interval
  arithmetic (so cancellation near z0 shows up as honest width), hulled
  with the limit value at z0 and intersected with the lagrange
  interval.  The intersection is sound because both intervals contain
  the range of R, and it makes sharp nested in lagrange by
  construction.

All routines are vectorized over entry arrays; scalars go through the
same code with 0-d arrays.
"""

import math

import numpy as np

from .. import funcs
from .._kernels import iv_add, iv_mul, iv_scale, nudge_down, nudge_up
from ..errors import DomainError, UnsupportedDegree
from ..intervals import Interval
from ..polymin import poly_roots

__all__ = ["elementary_remainder", "remainder_arrays", "MIN_DEGREE", "MAX_DEGREE"]

MIN_DEGREE = 2
MAX_DEGREE = 6

_EPS = np.finfo(np.float64).eps
_FACT = [math.factorial(i) for i in range(MAX_DEGREE + 2)]


def _softplus_deriv_polys(n):
    """Coefficients of softplus^(i) as polynomials in u = sigmoid(z).

    softplus' = u and d/dz = u(1-u) d/du, so the table follows from the
    recurrence S_{i+1} = S_i'(u) * (u - u^2); coefficients stay integer.
    """
    polys = {1: np.array([0.0, 1.0])}
    for i in range(1, n):
        s = polys[i]
        ds = s[1:] * np.arange(1, s.size)
        polys[i + 1] = np.convolve(ds, np.array([0.0, 1.0, -1.0]))
    return polys


_S_POLY = _softplus_deriv_polys(MAX_DEGREE + 2)
_S_CRIT = {
    i: np.array([r for r in poly_roots(c[1:] * np.arange(1, c.size)) if 0.0 < r < 1.0])
    for i, c in _S_POLY.items()
}


def _deriv_poly(fn, order):
    if fn == "softplus":
        return _S_POLY[order], _S_CRIT[order]
    if fn == "sigmoid":
        return _S_POLY[order + 1], _S_CRIT[order + 1]
    raise AssertionError(fn)


def _polyval_pair(coeffs, u):
    """Point values plus a rounding-error radius for sum |c_i u^i|."""
    val = np.zeros_like(u)
    mag = np.zeros_like(u)
    au = np.abs(u)
    for c in coeffs[::-1]:
        val = val * u + c
        mag = mag * au + abs(c)
    err = 2.0 * coeffs.size * _EPS * mag
    return val, err


def _poly_range_on_u(coeffs, crits, ulo, uhi):
    """Exact range of a polynomial over per-entry intervals [ulo, uhi]."""
    vlo, elo = _polyval_pair(coeffs, ulo)
    vhi, ehi = _polyval_pair(coeffs, uhi)
    lo = np.minimum(vlo - elo, vhi - ehi)
    hi = np.maximum(vlo + elo, vhi + ehi)
    for c in crits:
        inside = (ulo <= c) & (c <= uhi)
        if np.any(inside):
            vc, ec = _polyval_pair(coeffs, np.asarray(c, dtype=np.float64))
            lo = np.where(inside, np.minimum(lo, vc - ec), lo)
            hi = np.where(inside, np.maximum(hi, vc + ec), hi)
    return nudge_down(lo), nudge_up(hi)


def _sigmoid_pair(z):
    """Enclosure of sigmoid(z), clamped to [0, 1]."""
    s = funcs.sigmoid(z)
    return np.clip(nudge_down(s), 0.0, 1.0), np.clip(nudge_up(s), 0.0, 1.0)


def _lagrange_arrays(fn, zlo, zhi, k):
    """Interval range of fn^(k)/k! over [zlo, zhi], per entry."""
    inv_fact = 1.0 / _FACT[k]
    if fn == "exp":
        lo = np.where(np.isfinite(zlo), nudge_down(np.exp(zlo)), 0.0)
        hi = np.where(np.isfinite(zhi), nudge_up(np.exp(zhi)), np.inf)
        lo = np.maximum(lo, 0.0)
        return iv_scale(lo, hi, inv_fact)
    if fn == "log":
        if np.any(zlo <= 0.0):
            raise DomainError("log remainder needs a strictly positive range")
        # d^k log / k! = (-1)^(k-1) / (k z^k), monotone in z
        vlo = 1.0 / (k * zhi**k)
        vhi = 1.0 / (k * zlo**k)
        vlo = np.where(np.isfinite(zhi), nudge_down(vlo), 0.0)
        vhi = nudge_up(vhi)
        if k % 2 == 1:
            return np.maximum(vlo, 0.0), vhi
        return -vhi, -np.maximum(vlo, 0.0)
    if fn in ("softplus", "sigmoid"):
        coeffs, crits = _deriv_poly(fn, k)
        ulo, _ = _sigmoid_pair(zlo)
        _, uhi = _sigmoid_pair(zhi)
        lo, hi = _poly_range_on_u(coeffs, crits, ulo, uhi)
        return iv_scale(lo, hi, inv_fact)
    raise DomainError(f"no remainder rule for elementary function {fn!r}")


def _deriv_value_pair(fn, z, order):
    """Enclosure of fn^(order)(z)/order! at point entries z."""
    inv_fact = 1.0 / _FACT[order]
    if fn == "exp":
        v = np.exp(z)
        return iv_scale(nudge_down(v), nudge_up(v), inv_fact)
    if fn == "log":
        if order == 0:
            v = np.log(z)
            return nudge_down(v), nudge_up(v)
        v = 1.0 / (order * z**order)
        lo, hi = nudge_down(v), nudge_up(v)
        if order % 2 == 1:
            return lo, hi
        return -hi, -lo
    if fn in ("softplus", "sigmoid"):
        if order == 0:
            v = funcs.apply_fn(fn, z)
            return nudge_down(v), nudge_up(v)
        coeffs, _ = _deriv_poly(fn, order)
        ulo, uhi = _sigmoid_pair(z)
        vl, el = _polyval_pair(coeffs, ulo)
        vh, eh = _polyval_pair(coeffs, uhi)
        lo = nudge_down(np.minimum(vl - el, vh - eh))
        hi = nudge_up(np.maximum(vl + el, vh + eh))
        return iv_scale(lo, hi, inv_fact)
    raise DomainError(f"no remainder rule for elementary function {fn!r}")


def _scaled_remainder_at(fn, z0, b, k):
    """Interval value of R(b) = (fn(b) - T_{k-1}(b; z0)) / (b - z0)^k.

    Returns (lo, hi, ok); entries with ill-conditioned denominators or
    indeterminate numerators have ok False and must use the lagrange
    interval instead.
    """
    flo, fhi = _deriv_value_pair(fn, b, 0)
    dlo, dhi = iv_add(b, b, -z0, -z0)  # b - z0 as an interval
    tlo = np.zeros_like(b)
    thi = np.zeros_like(b)
    for i in range(k - 1, -1, -1):
        tlo, thi = iv_mul(tlo, thi, dlo, dhi)
        alo, ahi = _deriv_value_pair(fn, z0, i)
        tlo, thi = iv_add(tlo, thi, alo, ahi)
    nlo, nhi = iv_add(flo, fhi, -thi, -tlo)  # fn(b) - T
    plo = np.ones_like(b)
    phi = np.ones_like(b)
    for _ in range(k):
        plo, phi = iv_mul(plo, phi, dlo, dhi)
    # divide: denominator is sign-definite per entry (b != z0)
    neg = phi < 0.0
    rlo = np.where(neg, -phi, plo)
    rhi = np.where(neg, -plo, phi)
    ok = rlo > np.finfo(np.float64).tiny
    rlo = np.where(ok, rlo, 1.0)
    rhi = np.where(ok, rhi, 1.0)
    inv_lo = nudge_down(1.0 / rhi)
    inv_hi = nudge_up(1.0 / rlo)
    qlo, qhi = iv_mul(nlo, nhi, inv_lo, inv_hi)
    qlo, qhi = np.where(neg, -qhi, qlo), np.where(neg, -qlo, qhi)
    ok = ok & ~np.isnan(qlo) & ~np.isnan(qhi)
    return qlo, qhi, ok


def _monotone_side_mask(fn, side_lo, side_hi, k):
    """Entries where f^(k+1) keeps one sign on [side_lo, side_hi].

    The scaled remainder is a confluent divided difference f[z0,..,z0,z]
    whose z-derivative equals f^(k+2-1)(xi)/(k+1)! for some xi in the
    hull, so a constant sign of f^(k+1) over the side makes R monotone
    there and endpoint evaluation exact.
    """
    if fn == "exp":
        return np.ones(np.broadcast_shapes(side_lo.shape, side_hi.shape), dtype=bool)
    if fn == "log":
        # (-1)^k k! / z^(k+1) has one sign on the positive axis
        return np.ones(np.broadcast_shapes(side_lo.shape, side_hi.shape), dtype=bool)
    coeffs, crits = _deriv_poly(fn, k + 1)
    ulo, _ = _sigmoid_pair(side_lo)
    _, uhi = _sigmoid_pair(side_hi)
    rlo, rhi = _poly_range_on_u(coeffs, crits, ulo, uhi)
    return (rlo >= 0.0) | (rhi <= 0.0)


def remainder_arrays(fn, z0, zlo, zhi, k, method):
    """Vectorized remainder intervals; returns (lo, hi) entry arrays."""
    if not (MIN_DEGREE <= k <= MAX_DEGREE):
        raise UnsupportedDegree(f"degree {k} outside [{MIN_DEGREE}, {MAX_DEGREE}]")
    z0 = np.asarray(z0, dtype=np.float64)
    zlo = np.asarray(zlo, dtype=np.float64)
    zhi = np.asarray(zhi, dtype=np.float64)
    if np.any(zlo > z0) or np.any(zhi < z0):
        raise ValueError("remainder range must contain the center")
    if fn == "log" and np.any(zlo <= 0.0):
        raise DomainError("log remainder needs a strictly positive range")

    degenerate = zlo == zhi
    if np.all(degenerate):
        return _deriv_value_pair(fn, z0, k)

    lag_lo, lag_hi = _lagrange_arrays(fn, zlo, zhi, k)
    if method == "lagrange":
        lo, hi = lag_lo, lag_hi
    elif method == "sharp":
        lo, hi = _deriv_value_pair(fn, z0, k)  # limit value at the center
        z0b = np.broadcast_to(z0, np.broadcast_shapes(z0.shape, zlo.shape, zhi.shape))
        for side_lo, side_hi, endpoint, active in (
            (zlo, z0b, zlo, (zlo < z0b)),
            (z0b, zhi, zhi, (zhi > z0b)),
        ):
            if not np.any(active):
                continue
            mono = active & np.isfinite(endpoint) & _monotone_side_mask(fn, side_lo, side_hi, k)
            if np.any(mono):
                elo, ehi, ok = _scaled_remainder_at(fn, z0b, np.where(mono, endpoint, z0b + 1.0), k)
                good = mono & ok
                lo = np.where(good, np.minimum(lo, elo), lo)
                hi = np.where(good, np.maximum(hi, ehi), hi)
                mono = good
            rest = active & ~mono
            if np.any(rest):
                # no monotonicity certificate: lagrange over this side only
                slo, shi = _lagrange_arrays(fn, side_lo, side_hi, k)
                lo = np.where(rest, np.minimum(lo, slo), lo)
                hi = np.where(rest, np.maximum(hi, shi), hi)
        # intersect with lagrange: both contain range(R), so this is sound
        # and enforces sharp nested in lagrange
        lo = np.maximum(lo, lag_lo)
        hi = np.minimum(hi, lag_hi)
        bad = lo > hi  # numerically empty: fall back to lagrange
        lo = np.where(bad, lag_lo, lo)
        hi = np.where(bad, lag_hi, hi)
    else:
        raise ValueError(f"unknown remainder method {method!r}")
    if np.any(degenerate):
        dlo, dhi = _deriv_value_pair(fn, z0, k)
        lo = np.where(degenerate, dlo, lo)
        hi = np.where(degenerate, dhi, hi)
    return lo, hi


def elementary_remainder(fn, z0: float, zrange: Interval, k: int, method: str = "sharp") -> Interval:
    """Remainder interval I for one elementary composition step."""
    lo, hi = remainder_arrays(fn, np.float64(z0), np.float64(zrange.lo), np.float64(zrange.hi), k, method)
    return Interval(float(lo), float(hi))
