"""Array-level interval arithmetic on (lo, hi) float64 pairs.

Elementwise primitives come from :mod:`automm._kernels` (compiled when
available).  This module adds the reductions and matrix products used by
the enclosure propagator; every routine widens its result to cover
floating-point rounding, so containment is preserved end to end.

The matrix-product helpers assume finite endpoints (the propagator
raises before unbounded intervals reach a contraction); the elementwise
kernels handle infinities with the 0*inf = 0 convention.
"""

import numpy as np

from ._kernels import iv_add, iv_mul, iv_scale, iv_sub, nudge_down, nudge_up

__all__ = [
    "iv_add",
    "iv_sub",
    "iv_mul",
    "iv_scale",
    "nudge_down",
    "nudge_up",
    "sum_pair",
    "matmul_pair_point",
    "matmul_point_pair",
    "matmul_pair_pair",
    "widen_for_terms",
]

_EPS = np.finfo(np.float64).eps


def _widen(lo, hi, err):
    wl = np.where(np.isfinite(lo), lo - err, lo)
    wh = np.where(np.isfinite(hi), hi + err, hi)
    return nudge_down(wl), nudge_up(wh)


def widen_for_terms(lo, hi, n_terms, magnitude):
    """Widen by an n-term summation error bound of the given magnitude."""
    err = n_terms * _EPS * np.where(np.isfinite(magnitude), magnitude, 0.0)
    return _widen(lo, hi, err)


def sum_pair(lo, hi, axis=None):
    """Interval sum along ``axis`` with summation-error widening."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    n = lo.size if axis is None else lo.shape[axis]
    mag = np.sum(np.maximum(np.abs(lo), np.abs(hi)), axis=axis)
    err = n * _EPS * np.where(np.isfinite(mag), mag, 0.0)
    return _widen(np.sum(lo, axis=axis), np.sum(hi, axis=axis), err)


def matmul_pair_point(alo, ahi, b):
    """Interval matrix times point matrix, outward-rounded.

    Exact split-sign formulation: lo = alo @ b+ + ahi @ b-, etc.
    """
    bp = np.maximum(b, 0.0)
    bn = np.minimum(b, 0.0)
    lo = alo @ bp + ahi @ bn
    hi = ahi @ bp + alo @ bn
    n = b.shape[0] if b.ndim >= 1 else 1
    mag = np.maximum(np.abs(alo), np.abs(ahi)) @ np.abs(b)
    return _widen(lo, hi, (n + 1) * _EPS * mag)


def matmul_point_pair(a, blo, bhi):
    ap = np.maximum(a, 0.0)
    an = np.minimum(a, 0.0)
    lo = ap @ blo + an @ bhi
    hi = ap @ bhi + an @ blo
    n = a.shape[-1] if a.ndim >= 1 else 1
    mag = np.abs(a) @ np.maximum(np.abs(blo), np.abs(bhi))
    return _widen(lo, hi, (n + 1) * _EPS * mag)


def matmul_pair_pair(alo, ahi, blo, bhi):
    """Interval matrix times interval matrix (midpoint-radius form).

    Rump's scheme: sound, overestimates the radius by at most a small
    constant factor, and runs on four BLAS products.
    """
    am = 0.5 * (alo + ahi)
    ar = am - alo
    bm = 0.5 * (blo + bhi)
    br = bm - blo
    cm = am @ bm
    aam = np.abs(am)
    abm = np.abs(bm)
    cr = aam @ br + ar @ abm + ar @ br
    n = blo.shape[0] if blo.ndim >= 1 else 1
    cr = cr + (n + 2) * _EPS * (aam @ abm + cr)
    return nudge_down(cm - cr), nudge_up(cm + cr)
