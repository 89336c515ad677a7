"""NumPy reference implementation of the elementwise interval kernels.

All kernels operate on pairs of float64 arrays (lower, upper) and round
outward by one ulp so that the returned interval contains the exact
result of the operation.  Conventions:

* ``0 * inf = 0`` inside interval products (needed when unbounded trust
  regions meet zero coefficients),
* a degenerate zero operand short-circuits to the exact identity
  (``[0,0] + a = a``, ``[0,0] * a = [0,0]``), and a degenerate one
  factor likewise (``[1,1] * a = a``), so that identities hold exactly.
"""

import numpy as np

BACKEND = "numpy"

_INF = np.inf


def nudge_down(x):
    return np.nextafter(x, -_INF)


def nudge_up(x):
    return np.nextafter(x, _INF)


def _degenerate(lo, hi, value):
    return np.logical_and(lo == value, hi == value)


def iv_add(alo, ahi, blo, bhi):
    alo, ahi, blo, bhi = np.broadcast_arrays(alo, ahi, blo, bhi)
    lo = nudge_down(alo + blo)
    hi = nudge_up(ahi + bhi)
    a_zero = _degenerate(alo, ahi, 0.0)
    b_zero = _degenerate(blo, bhi, 0.0)
    lo = np.where(a_zero, blo, np.where(b_zero, alo, lo))
    hi = np.where(a_zero, bhi, np.where(b_zero, ahi, hi))
    return lo, hi


def iv_sub(alo, ahi, blo, bhi):
    return iv_add(alo, ahi, np.negative(bhi), np.negative(blo))


def _prod(x, y):
    p = x * y
    # inputs are valid intervals, so NaN can only come from 0 * inf
    return np.where(np.isnan(p), 0.0, p)


def iv_mul(alo, ahi, blo, bhi):
    alo, ahi, blo, bhi = np.broadcast_arrays(alo, ahi, blo, bhi)
    p1 = _prod(alo, blo)
    p2 = _prod(alo, bhi)
    p3 = _prod(ahi, blo)
    p4 = _prod(ahi, bhi)
    lo = nudge_down(np.minimum(np.minimum(p1, p2), np.minimum(p3, p4)))
    hi = nudge_up(np.maximum(np.maximum(p1, p2), np.maximum(p3, p4)))
    a_zero = _degenerate(alo, ahi, 0.0)
    b_zero = _degenerate(blo, bhi, 0.0)
    zero = np.logical_or(a_zero, b_zero)
    lo = np.where(zero, 0.0, lo)
    hi = np.where(zero, 0.0, hi)
    a_one = _degenerate(alo, ahi, 1.0)
    b_one = _degenerate(blo, bhi, 1.0)
    lo = np.where(a_one, blo, np.where(b_one, alo, lo))
    hi = np.where(a_one, bhi, np.where(b_one, ahi, hi))
    a_neg = _degenerate(alo, ahi, -1.0)
    b_neg = _degenerate(blo, bhi, -1.0)
    lo = np.where(a_neg, -bhi, np.where(b_neg, -ahi, lo))
    hi = np.where(a_neg, -blo, np.where(b_neg, -alo, hi))
    # zero wins over the exact-factor cases ([0,0] * [1,1] = [0,0])
    lo = np.where(zero, 0.0, lo)
    hi = np.where(zero, 0.0, hi)
    return lo, hi


def iv_scale(alo, ahi, z):
    z = np.asarray(z, dtype=np.float64)
    return iv_mul(alo, ahi, z, z)
