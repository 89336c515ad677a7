# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused elementwise interval kernels.

Mirrors automm._kernels._numpy exactly: outward rounding by one ulp,
0 * inf = 0 inside products, and exact short-circuits for degenerate
zero / one operands.  Compiled without -ffast-math on purpose.
"""

import numpy as np

from libc.math cimport INFINITY, isnan, nextafter

BACKEND = "cython"


cdef inline double _nd(double x) nogil:
    return nextafter(x, -INFINITY)


cdef inline double _nu(double x) nogil:
    return nextafter(x, INFINITY)


cdef inline double _prod(double x, double y) nogil:
    cdef double p = x * y
    if isnan(p):
        return 0.0
    return p


def nudge_down(x):
    shape = np.shape(x)
    arr = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    cdef const double[::1] xv = arr.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = _nd(xv[i])
    return out.reshape(shape)


def nudge_up(x):
    shape = np.shape(x)
    arr = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    cdef const double[::1] xv = arr.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = _nu(xv[i])
    return out.reshape(shape)


cdef _prep(a, b, c, d):
    arrs = np.broadcast_arrays(
        np.asarray(a, dtype=np.float64),
        np.asarray(b, dtype=np.float64),
        np.asarray(c, dtype=np.float64),
        np.asarray(d, dtype=np.float64),
    )
    return [np.ascontiguousarray(x) for x in arrs], arrs[0].shape


def iv_add(alo, ahi, blo, bhi):
    (al, ah, bl, bh), shape = _prep(alo, ahi, blo, bhi)
    out_lo = np.empty_like(al)
    out_hi = np.empty_like(al)
    cdef const double[::1] alv = al.reshape(-1)
    cdef const double[::1] ahv = ah.reshape(-1)
    cdef const double[::1] blv = bl.reshape(-1)
    cdef const double[::1] bhv = bh.reshape(-1)
    cdef double[::1] lov = out_lo.reshape(-1)
    cdef double[::1] hiv = out_hi.reshape(-1)
    cdef Py_ssize_t i, n = alv.shape[0]
    cdef double x0, x1, y0, y1
    with nogil:
        for i in range(n):
            x0 = alv[i]; x1 = ahv[i]; y0 = blv[i]; y1 = bhv[i]
            if x0 == 0.0 and x1 == 0.0:
                lov[i] = y0; hiv[i] = y1
            elif y0 == 0.0 and y1 == 0.0:
                lov[i] = x0; hiv[i] = x1
            else:
                lov[i] = _nd(x0 + y0)
                hiv[i] = _nu(x1 + y1)
    return out_lo.reshape(shape), out_hi.reshape(shape)


def iv_sub(alo, ahi, blo, bhi):
    return iv_add(alo, ahi, np.negative(bhi), np.negative(blo))


def iv_mul(alo, ahi, blo, bhi):
    (al, ah, bl, bh), shape = _prep(alo, ahi, blo, bhi)
    out_lo = np.empty_like(al)
    out_hi = np.empty_like(al)
    cdef const double[::1] alv = al.reshape(-1)
    cdef const double[::1] ahv = ah.reshape(-1)
    cdef const double[::1] blv = bl.reshape(-1)
    cdef const double[::1] bhv = bh.reshape(-1)
    cdef double[::1] lov = out_lo.reshape(-1)
    cdef double[::1] hiv = out_hi.reshape(-1)
    cdef Py_ssize_t i, n = alv.shape[0]
    cdef double x0, x1, y0, y1, p1, p2, p3, p4, mn, mx
    with nogil:
        for i in range(n):
            x0 = alv[i]; x1 = ahv[i]; y0 = blv[i]; y1 = bhv[i]
            if (x0 == 0.0 and x1 == 0.0) or (y0 == 0.0 and y1 == 0.0):
                lov[i] = 0.0; hiv[i] = 0.0
            elif x0 == 1.0 and x1 == 1.0:
                lov[i] = y0; hiv[i] = y1
            elif y0 == 1.0 and y1 == 1.0:
                lov[i] = x0; hiv[i] = x1
            elif x0 == -1.0 and x1 == -1.0:
                lov[i] = -y1; hiv[i] = -y0
            elif y0 == -1.0 and y1 == -1.0:
                lov[i] = -x1; hiv[i] = -x0
            else:
                p1 = _prod(x0, y0); p2 = _prod(x0, y1)
                p3 = _prod(x1, y0); p4 = _prod(x1, y1)
                mn = p1
                if p2 < mn: mn = p2
                if p3 < mn: mn = p3
                if p4 < mn: mn = p4
                mx = p1
                if p2 > mx: mx = p2
                if p3 > mx: mx = p3
                if p4 > mx: mx = p4
                lov[i] = _nd(mn)
                hiv[i] = _nu(mx)
    return out_lo.reshape(shape), out_hi.reshape(shape)


def iv_scale(alo, ahi, z):
    z = np.asarray(z, dtype=np.float64)
    return iv_mul(alo, ahi, z, z)
