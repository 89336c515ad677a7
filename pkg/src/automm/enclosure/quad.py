"""Multivariate quadratic interval enclosures over a box trust region.

For h(eta) = f(x + U eta), eta in [0, T] in R^d, each tensor entry of an
intermediate node carries

    value(eta)  in  c0 + sum_i c1[i] eta_i + eta^T Q eta,   Q in [q_lo, q_hi]

with the direction axes stored first (c1: (d, *S), Q: (d, d, *S)) so all
contractions batch over leading axes.  Products truncate the cubic and
quartic terms into the quadratic interval matrix using ranges of the
linear/quadratic parts over the box, mirroring the directional engine at
k = 2; the box must be bounded.
"""

from dataclasses import dataclass

import numpy as np

from .._kernels import iv_add, iv_mul, iv_scale, nudge_down, nudge_up
from ..errors import ShapeError
from ..expr import ExprGraph
from ..intervals import Interval, TensorInterval
from .remainders import _deriv_value_pair, remainder_arrays

__all__ = ["QuadEnclosure", "propagate_quadratic", "QUAD_PROPAGATE_CALLS"]

QUAD_PROPAGATE_CALLS = 0

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class QuadEnclosure:
    """Scalar-output quadratic enclosure: c0 + c1^T eta + eta^T quad eta."""

    c0: float
    c1: np.ndarray
    quad: TensorInterval
    trust: np.ndarray

    def upper_matrix(self):
        """Symmetric upper quadratic matrix (right endpoints)."""
        return 0.5 * (self.quad.hi + self.quad.hi.T)

    def lower_matrix(self):
        return 0.5 * (self.quad.lo + self.quad.lo.T)

    def upper_value(self, eta):
        return self.c0 + self.c1 @ eta + eta @ self.upper_matrix() @ eta

    def lower_value(self, eta):
        return self.c0 + self.c1 @ eta + eta @ self.lower_matrix() @ eta


class _Box:
    def __init__(self, T, method):
        self.T = np.asarray(T, dtype=np.float64)
        if self.T.ndim != 1 or not np.all(self.T > 0.0) or not np.all(np.isfinite(self.T)):
            raise ValueError("box trust must be a finite positive vector")
        self.d = self.T.size
        self.method = method
        self.TT = np.multiply.outer(self.T, self.T)


class _QP:
    __slots__ = ("box", "c0", "c1", "q_lo", "q_hi", "shape")

    def __init__(self, box, c0, c1, q_lo, q_hi):
        self.box = box
        self.c0 = np.asarray(c0, dtype=np.float64)
        self.c1 = np.asarray(c1, dtype=np.float64)
        self.q_lo = np.asarray(q_lo, dtype=np.float64)
        self.q_hi = np.asarray(q_hi, dtype=np.float64)
        self.shape = np.broadcast_shapes(self.c0.shape, self.c1.shape[1:], self.q_lo.shape[2:])

    @classmethod
    def constant(cls, box, value):
        value = np.asarray(value, dtype=np.float64)
        d = box.d
        z1 = np.zeros((d,) + value.shape)
        z2 = np.zeros((d, d) + value.shape)
        return cls(box, value, z1, z2, z2)

    @classmethod
    def affine(cls, box, x0, dirs):
        x0 = np.asarray(x0, dtype=np.float64)
        z2 = np.zeros((box.d, box.d) + x0.shape)
        return cls(box, x0, np.asarray(dirs, dtype=np.float64), z2, z2)

    @classmethod
    def eta_vector(cls, box):
        d = box.d
        z2 = np.zeros((d, d, d))
        return cls(box, np.zeros(d), np.eye(d), z2, z2)

    def lin_zero(self):
        return not np.any(self.c1)

    def quad_zero(self):
        return not (np.any(self.q_lo) or np.any(self.q_hi))

    def padded(self, rank):
        """Components with trailing singleton entry axes up to rank."""
        pad = rank - len(self.shape)
        if pad <= 0:
            return self.c0, self.c1, self.q_lo, self.q_hi
        ones = (1,) * pad
        return (
            self.c0.reshape(self.c0.shape + ones),
            self.c1.reshape(self.c1.shape + ones),
            self.q_lo.reshape(self.q_lo.shape + ones),
            self.q_hi.reshape(self.q_hi.shape + ones),
        )


def _lin_range(c1, T):
    """Range of sum_i c1[i] eta_i over the box [0, T]; c1 is (d, *S)."""
    scaled = c1 * T.reshape((-1,) + (1,) * (c1.ndim - 1))
    lo = np.sum(np.minimum(scaled, 0.0), axis=0)
    hi = np.sum(np.maximum(scaled, 0.0), axis=0)
    mag = np.sum(np.abs(scaled), axis=0)
    err = (c1.shape[0] + 1) * _EPS * mag
    return nudge_down(lo - err), nudge_up(hi + err)


def _quad_range(q_lo, q_hi, box):
    """Range of eta^T Q eta over the box; Q is (d, d, *S) interval."""
    tt = box.TT.reshape(box.TT.shape + (1,) * (q_lo.ndim - 2))
    plo, phi = iv_mul(q_lo, q_hi, np.zeros_like(tt), tt)
    n = box.d * box.d
    lo = np.sum(plo, axis=(0, 1))
    hi = np.sum(phi, axis=(0, 1))
    mag = np.sum(np.maximum(np.abs(plo), np.abs(phi)), axis=(0, 1))
    err = (n + 1) * _EPS * mag
    return nudge_down(lo - err), nudge_up(hi + err)


def qp_add(a, b, sub=False):
    rank = max(len(a.shape), len(b.shape))
    a0, a1, alo, ahi = a.padded(rank)
    b0, b1, blo, bhi = b.padded(rank)
    if sub:
        c0 = a0 - b0
        c1 = a1 - b1
        lo, hi = iv_add(alo, ahi, -bhi, -blo)
    else:
        c0 = a0 + b0
        c1 = a1 + b1
        lo, hi = iv_add(alo, ahi, blo, bhi)
    return _QP(a.box, c0, c1, lo, hi)


def qp_scale(a, c):
    c = np.asarray(c, dtype=np.float64)
    lo, hi = iv_scale(a.q_lo, a.q_hi, c)
    return _QP(a.box, c * a.c0, c * a.c1, lo, hi)


class _QAccum:
    def __init__(self, shape, d):
        self.lo = np.zeros((d, d) + shape)
        self.hi = np.zeros((d, d) + shape)

    def add(self, lo, hi):
        self.lo, self.hi = iv_add(self.lo, self.hi, lo, hi)

    def add_point(self, val, mag, n_terms):
        if not np.any(val) and not np.any(mag):
            return
        err = (n_terms + 1) * _EPS * mag
        self.add(val - err, val + err)


def _sym(t):
    return 0.5 * (t + np.swapaxes(t, 0, 1))


def qp_mul(a, b):
    """Elementwise product with truncation into the quadratic interval."""
    rank = max(len(a.shape), len(b.shape))
    a0, a1, a_qlo, a_qhi = a.padded(rank)
    b0, b1, b_qlo, b_qhi = b.padded(rank)
    c0 = a0 * b0
    c1 = a0[None] * b1 + b0[None] * a1
    acc = _QAccum(np.broadcast_shapes(a.shape, b.shape), a.box.d)
    a_lz, b_lz = a.lin_zero(), b.lin_zero()
    a_qz, b_qz = a.quad_zero(), b.quad_zero()
    if not (a_lz or b_lz):
        t = _sym(a1[:, None] * b1[None, :])
        tm = _sym(np.abs(a1)[:, None] * np.abs(b1)[None, :])
        acc.add_point(t, tm, 2)
    if not b_qz:
        acc.add(*iv_scale(b_qlo, b_qhi, a0[None, None]))
    if not a_qz:
        acc.add(*iv_scale(a_qlo, a_qhi, b0[None, None]))
    if not (a_lz or b_qz):  # (a1.eta)(eta' Bq eta) folded via range of a1.eta
        rlo, rhi = _lin_range(a1, a.box.T)
        acc.add(*iv_mul(b_qlo, b_qhi, rlo[None, None], rhi[None, None]))
    if not (b_lz or a_qz):
        rlo, rhi = _lin_range(b1, b.box.T)
        acc.add(*iv_mul(a_qlo, a_qhi, rlo[None, None], rhi[None, None]))
    if not (a_qz or b_qz):  # quartic: bound one quadratic form by its range
        rlo, rhi = _quad_range(a_qlo, a_qhi, a.box)
        acc.add(*iv_mul(b_qlo, b_qhi, rlo[None, None], rhi[None, None]))
    return _QP(a.box, c0, c1, acc.lo, acc.hi)


def qp_power(a, m):
    if m == 0:
        return _QP.constant(a.box, np.ones(a.shape))
    result = None
    base = a
    while m:
        if m & 1:
            result = base if result is None else qp_mul(result, base)
        m >>= 1
        if m:
            base = qp_mul(base, base)
    return result


def _mm(x, y):
    return np.matmul(x, y)


def _mm_pair_point(xlo, xhi, y):
    yp = np.maximum(y, 0.0)
    yn = np.minimum(y, 0.0)
    lo = _mm(xlo, yp) + _mm(xhi, yn)
    hi = _mm(xhi, yp) + _mm(xlo, yn)
    mag = _mm(np.maximum(np.abs(xlo), np.abs(xhi)), np.abs(y))
    n = y.shape[0] if y.ndim >= 1 else 1
    err = (n + 1) * _EPS * mag
    return nudge_down(lo - err), nudge_up(hi + err)


def _mm_point_pair(x, ylo, yhi):
    xp = np.maximum(x, 0.0)
    xn = np.minimum(x, 0.0)
    lo = _mm(xp, ylo) + _mm(xn, yhi)
    hi = _mm(xp, yhi) + _mm(xn, ylo)
    mag = _mm(np.abs(x), np.maximum(np.abs(ylo), np.abs(yhi)))
    n = x.shape[-1] if x.ndim >= 1 else 1
    err = (n + 1) * _EPS * mag
    return nudge_down(lo - err), nudge_up(hi + err)


def _mm_pair_pair(xlo, xhi, ylo, yhi):
    xm = 0.5 * (xlo + xhi)
    xr = xm - xlo
    ym = 0.5 * (ylo + yhi)
    yr = ym - ylo
    cm = _mm(xm, ym)
    axm = np.abs(xm)
    aym = np.abs(ym)
    cr = _mm(axm, yr) + _mm(xr, aym) + _mm(xr, yr)
    n = ylo.shape[-2] if ylo.ndim >= 2 else 1
    cr = cr + (n + 2) * _EPS * (_mm(axm, aym) + cr)
    return nudge_down(cm - cr), nudge_up(cm + cr)


def qp_matmul(a, b):
    """Contraction (matrix @ matrix or matrix @ vector) of enclosures."""
    box = a.box
    vector_rhs = len(b.shape) == 1
    if vector_rhs:
        b = _QP(box, b.c0[..., None], b.c1[..., None], b.q_lo[..., None], b.q_hi[..., None])
    c0 = _mm(a.c0, b.c0)
    out_shape = c0.shape
    c1 = _mm(a.c0, b.c1) + _mm(a.c1, b.c0)
    acc = _QAccum(out_shape, box.d)
    a_lz, b_lz = a.lin_zero(), b.lin_zero()
    a_qz, b_qz = a.quad_zero(), b.quad_zero()
    n_inner = a.c0.shape[-1]
    if not (a_lz or b_lz):
        t = _sym(_mm(a.c1[:, None], b.c1[None, :]))
        tm = _sym(_mm(np.abs(a.c1)[:, None], np.abs(b.c1)[None, :]))
        acc.add_point(t, tm, 2 * n_inner)
    if not b_qz:
        acc.add(*_mm_point_pair(a.c0, b.q_lo, b.q_hi))
    if not a_qz:
        acc.add(*_mm_pair_point(a.q_lo, a.q_hi, b.c0))
    d = box.d

    def scale_and_sum(lo, hi):
        # absorb the leading direction axis l through eta_l in [0, T_l]
        tl = box.T.reshape((d,) + (1,) * (lo.ndim - 1))
        lo, hi = iv_mul(lo, hi, np.zeros_like(tl), tl)
        return sum_pair_axes(lo, hi, axis=0)

    if not (a_lz or b_qz):
        # cubic (a1' eta)(eta' Bq eta): contract each direction's point
        # slope with Bq first, then fold its eta factor
        lo, hi = _mm_point_pair(a.c1[:, None, None], b.q_lo[None], b.q_hi[None])
        acc.add(*scale_and_sum(lo, hi))
    if not (b_lz or a_qz):
        lo, hi = _mm_pair_point(a.q_lo[None], a.q_hi[None], b.c1[:, None, None])
        acc.add(*scale_and_sum(lo, hi))
    if not (a_qz or b_qz):
        # quartic: fold b's quadratic-form range per entry, then contract
        rlo, rhi = _quad_range(b.q_lo, b.q_hi, box)
        acc.add(*_mm_pair_pair(a.q_lo, a.q_hi, rlo, rhi))
    if vector_rhs:
        return _QP(box, c0[..., 0], c1[..., 0], acc.lo[..., 0], acc.hi[..., 0])
    return _QP(box, c0, c1, acc.lo, acc.hi)


def qp_sum(a):
    if a.shape == ():
        return a
    a0, a1, aqlo, aqhi = a.padded(len(a.shape))
    axes = tuple(range(-len(a.shape), 0))
    c0 = np.sum(np.broadcast_to(a0, a.shape))
    c1 = np.sum(np.broadcast_to(a1, (a.box.d,) + a.shape), axis=axes)
    qsh = (a.box.d, a.box.d) + a.shape
    qlo = np.broadcast_to(aqlo, qsh)
    qhi = np.broadcast_to(aqhi, qsh)
    lo = np.sum(qlo, axis=axes)
    hi = np.sum(qhi, axis=axes)
    n = int(np.prod(a.shape))
    mag = np.sum(np.maximum(np.abs(qlo), np.abs(qhi)), axis=axes)
    err = n * _EPS * mag
    return _QP(a.box, c0, c1, nudge_down(lo - err), nudge_up(hi + err))


def _range_horner(a0, a1, q_lo, q_hi, box, shape):
    """Range of the enclosure over the box in nested (Horner-like) form:
    c0 + sum_i [0,T_i] (c1_i + sum_j Q_ij [0,T_j]), matching the
    directional engine's interval Horner at d = 1."""
    d = box.d
    tj = box.T.reshape((1, d) + (1,) * len(shape))
    inner_lo, inner_hi = iv_mul(q_lo, q_hi, np.zeros_like(tj), tj)
    inner_lo, inner_hi = sum_pair_axes(inner_lo, inner_hi, axis=1)
    inner_lo, inner_hi = iv_add(inner_lo, inner_hi, a1, a1)
    ti = box.T.reshape((d,) + (1,) * len(shape))
    outer_lo, outer_hi = iv_mul(inner_lo, inner_hi, np.zeros_like(ti), ti)
    outer_lo, outer_hi = sum_pair_axes(outer_lo, outer_hi, axis=0)
    return iv_add(outer_lo, outer_hi, a0, a0)


def sum_pair_axes(lo, hi, axis):
    n = lo.shape[axis]
    mag = np.sum(np.maximum(np.abs(lo), np.abs(hi)), axis=axis)
    err = (n + 1) * _EPS * np.where(np.isfinite(mag), mag, 0.0)
    slo = np.sum(lo, axis=axis)
    shi = np.sum(hi, axis=axis)
    slo = np.where(np.isfinite(slo), slo - err, slo)
    shi = np.where(np.isfinite(shi), shi + err, shi)
    return nudge_down(slo), nudge_up(shi)


def qp_compose(fn, a):
    """Quadratic enclosure of fn(a(eta)) over the box."""
    a0, a1, aqlo, aqhi = a.padded(len(a.shape))
    z0 = np.broadcast_to(a0, a.shape)
    zlo, zhi = _range_horner(
        z0,
        np.broadcast_to(a1, (a.box.d,) + a.shape),
        np.broadcast_to(aqlo, (a.box.d, a.box.d) + a.shape),
        np.broadcast_to(aqhi, (a.box.d, a.box.d) + a.shape),
        a.box,
        a.shape,
    )
    zlo = np.minimum(zlo, z0)
    zhi = np.maximum(zhi, z0)
    ig_lo, ig_hi = remainder_arrays(fn, z0, zlo, zhi, 2, a.box.method)
    flo, fhi = _deriv_value_pair(fn, z0, 0)
    dlo, dhi = _deriv_value_pair(fn, z0, 1)
    f0 = 0.5 * (flo + fhi)
    f1 = 0.5 * (dlo + dhi)
    dev = _QP(a.box, np.zeros(a.shape), a1, aqlo, aqhi)
    dev2 = qp_mul(dev, dev)
    out = qp_scale(dev, f1)
    lo, hi = iv_mul(ig_lo[None, None], ig_hi[None, None], dev2.q_lo, dev2.q_hi)
    lo, hi = iv_add(out.q_lo, out.q_hi, lo, hi)
    return _QP(a.box, out.c0 + f0, out.c1, lo, hi)


def propagate_quadratic(g: ExprGraph, etabar, method: str = "sharp") -> QuadEnclosure:
    """Quadratic enclosure of a graph in one vector variable eta over
    the box [0, etabar]; etabar must be finite elementwise."""
    global QUAD_PROPAGATE_CALLS
    QUAD_PROPAGATE_CALLS += 1
    etabar = np.asarray(etabar, dtype=np.float64)
    if set(g.variables) != {"eta"}:
        raise ShapeError("quadratic propagation needs a single vector variable eta")
    d = g.variables["eta"][0] if g.variables["eta"] else None
    if d is None or etabar.shape != (d,):
        raise ShapeError("trust vector must match the direction count")
    box = _Box(etabar, method)
    vals = {}
    for node in g.topo:
        kind = node.kind
        if kind == "const":
            out = _QP.constant(box, node.payload)
        elif kind == "var":
            out = _QP.eta_vector(box)
        elif kind == "affine":
            _, x0, dirs = node.payload
            out = _QP.affine(box, x0, dirs)
        elif kind == "add":
            out = qp_add(vals[id(node.children[0])], vals[id(node.children[1])])
        elif kind == "sub":
            out = qp_add(vals[id(node.children[0])], vals[id(node.children[1])], sub=True)
        elif kind == "mul":
            out = qp_mul(vals[id(node.children[0])], vals[id(node.children[1])])
        elif kind == "matmul":
            out = qp_matmul(vals[id(node.children[0])], vals[id(node.children[1])])
        elif kind == "sum":
            out = qp_sum(vals[id(node.children[0])])
        elif kind == "unary":
            out = qp_compose(node.payload, vals[id(node.children[0])])
        elif kind == "intpow":
            out = qp_power(vals[id(node.children[0])], node.payload)
        else:
            raise AssertionError(f"unknown node kind {kind}")
        vals[id(node)] = out
    r = vals[id(g.output)]
    qlo = _sym(np.asarray(r.q_lo).reshape(d, d))
    qhi = _sym(np.asarray(r.q_hi).reshape(d, d))
    return QuadEnclosure(
        float(np.asarray(r.c0).reshape(())),
        np.asarray(r.c1).reshape(d).copy(),
        TensorInterval(qlo, qhi),
        etabar.copy(),
    )
