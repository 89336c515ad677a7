"""Degree-k Taylor interval polynomials in one step-size variable.

An enclosure of h on the trust region [0, etabar] is stored as

    h(eta)  in  sum_{i<k} c_i eta^i + [rem_lo, rem_hi] eta^k

per tensor entry: orders 0..k-1 are plain float64 coefficients (their
rounding is absorbed by the soundness slack), the order-k coefficient is
a rigorously outward-rounded interval.  Multiplication convolves to
degree 2k and folds every order j > k back into order k by multiplying
with the interval range of eta^(j-k) over the trust region; folds of
nonzero terms over an infinite trust region raise UnboundedTrust, which
is exactly the condition under which a finite trust region is required.

The scalar public type :class:`DirectionalPoly` and its operations are
thin wrappers over the vectorized engine.
"""

from dataclasses import dataclass

import numpy as np

from .._kernels import iv_add, iv_mul, iv_scale, nudge_down, nudge_up
from ..errors import DegreeMismatch, UnboundedTrust, UnsupportedDegree
from ..intervals import Interval
from .remainders import MAX_DEGREE, MIN_DEGREE, remainder_arrays

__all__ = [
    "Trust",
    "TaylorPoly",
    "DirectionalPoly",
    "dpoly_add",
    "dpoly_scale",
    "dpoly_mul",
    "dpoly_compose_elementary",
    "range_bound",
    "upper_poly",
    "lower_poly",
]

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class Trust:
    """Shared propagation context: degree, trust bound, remainder method."""

    k: int
    etabar: float
    method: str = "sharp"

    def __post_init__(self):
        if not (MIN_DEGREE <= self.k <= MAX_DEGREE):
            raise UnsupportedDegree(f"degree {self.k} outside [{MIN_DEGREE}, {MAX_DEGREE}]")
        if not self.etabar > 0.0:
            raise ValueError("trust bound must be positive")

    @property
    def bounded(self):
        return np.isfinite(self.etabar)

    def compatible(self, other):
        return self.k == other.k and self.etabar == other.etabar and self.method == other.method


def _zeros_like_entry(shape):
    return np.zeros(shape, dtype=np.float64)


class TaylorPoly:
    """Vectorized enclosure; one polynomial per tensor entry."""

    __slots__ = ("trust", "coeffs", "rem_lo", "rem_hi", "shape")

    def __init__(self, trust, coeffs, rem_lo, rem_hi):
        self.trust = trust
        self.coeffs = [np.asarray(c, dtype=np.float64) for c in coeffs]
        self.rem_lo = np.asarray(rem_lo, dtype=np.float64)
        self.rem_hi = np.asarray(rem_hi, dtype=np.float64)
        self.shape = np.broadcast_shapes(*(c.shape for c in self.coeffs), self.rem_lo.shape)

    @classmethod
    def constant(cls, trust, value):
        value = np.asarray(value, dtype=np.float64)
        z = _zeros_like_entry(value.shape)
        coeffs = [value] + [z] * (trust.k - 1)
        return cls(trust, coeffs, z, z)

    @classmethod
    def eta(cls, trust):
        coeffs = [np.float64(0.0), np.float64(1.0)] + [np.float64(0.0)] * (trust.k - 2)
        return cls(trust, coeffs, np.float64(0.0), np.float64(0.0))

    def rem_is_zero(self):
        return not (np.any(self.rem_lo) or np.any(self.rem_hi))

    def top_order(self):
        """Highest order with any nonzero content (k for the remainder)."""
        if not self.rem_is_zero():
            return self.trust.k
        for j in range(self.trust.k - 1, -1, -1):
            if np.any(self.coeffs[j]):
                return j
        return 0


def _check(a, b):
    if not a.trust.compatible(b.trust):
        raise DegreeMismatch("operands have different degree or trust region")


def tp_add(a, b, sub=False):
    _check(a, b)
    if sub:
        coeffs = [ca - cb for ca, cb in zip(a.coeffs, b.coeffs)]
        lo, hi = iv_add(a.rem_lo, a.rem_hi, -b.rem_hi, -b.rem_lo)
    else:
        coeffs = [ca + cb for ca, cb in zip(a.coeffs, b.coeffs)]
        lo, hi = iv_add(a.rem_lo, a.rem_hi, b.rem_lo, b.rem_hi)
    return TaylorPoly(a.trust, coeffs, lo, hi)


def tp_scale(a, c):
    c = np.asarray(c, dtype=np.float64)
    lo, hi = iv_scale(a.rem_lo, a.rem_hi, c)
    return TaylorPoly(a.trust, [c * ci for ci in a.coeffs], lo, hi)


def tp_neg(a):
    return TaylorPoly(a.trust, [-c for c in a.coeffs], -a.rem_hi, -a.rem_lo)


class _RemAccum:
    """Accumulates interval contributions at order k, folding excess
    orders through the range of eta^excess over [0, etabar]."""

    def __init__(self, trust, shape):
        self.trust = trust
        self.lo = _zeros_like_entry(shape)
        self.hi = _zeros_like_entry(shape)

    def add_iv(self, lo, hi, excess):
        if excess > 0:
            if not (np.any(lo) or np.any(hi)):
                return
            if not self.trust.bounded:
                raise UnboundedTrust(
                    "truncation over an infinite trust region; supply a finite trust bound"
                )
            t = float(nudge_up(np.float64(self.trust.etabar**excess)))
            lo, hi = iv_mul(lo, hi, np.float64(0.0), np.float64(t))
        self.lo, self.hi = iv_add(self.lo, self.hi, lo, hi)

    def add_scalar_terms(self, val, mag, n_terms, excess):
        """Fold a plain-float coefficient with an n-term rounding bound."""
        if not (np.any(val) or np.any(mag)):
            return
        err = (n_terms + 1) * _EPS * mag
        self.add_iv(val - err, val + err, excess)


def tp_mul(a, b):
    """Truncated product; sound on the shared trust region."""
    _check(a, b)
    k = a.trust.k
    ta, tb = a.top_order(), b.top_order()
    out_coeffs = [None] * k
    for j in range(k):
        acc = None
        for p in range(max(0, j - (k - 1)), min(j, k - 1) + 1):
            term = a.coeffs[p] * b.coeffs[j - p]
            acc = term if acc is None else acc + term
        out_coeffs[j] = acc if acc is not None else np.float64(0.0)
    rem = _RemAccum(a.trust, np.broadcast_shapes(a.shape, b.shape))
    # scalar-coefficient convolution orders k..2k-2
    for j in range(k, min(ta, k - 1) + min(tb, k - 1) + 1):
        val = None
        mag = None
        n = 0
        for p in range(max(0, j - (k - 1)), min(j, k - 1) + 1):
            term = a.coeffs[p] * b.coeffs[j - p]
            tmag = np.abs(a.coeffs[p]) * np.abs(b.coeffs[j - p])
            val = term if val is None else val + term
            mag = tmag if mag is None else mag + tmag
            n += 1
        if val is not None:
            rem.add_scalar_terms(val, mag, n, j - k)
    # cross terms: one remainder times the other's scalar coefficients
    if not a.rem_is_zero():
        for q in range(min(tb, k - 1) + 1):
            if not np.any(b.coeffs[q]):
                continue
            lo, hi = iv_scale(a.rem_lo, a.rem_hi, b.coeffs[q])
            rem.add_iv(lo, hi, q)
    if not b.rem_is_zero():
        for p in range(min(ta, k - 1) + 1):
            if not np.any(a.coeffs[p]):
                continue
            lo, hi = iv_scale(b.rem_lo, b.rem_hi, a.coeffs[p])
            rem.add_iv(lo, hi, p)
    if not a.rem_is_zero() and not b.rem_is_zero():
        lo, hi = iv_mul(a.rem_lo, a.rem_hi, b.rem_lo, b.rem_hi)
        rem.add_iv(lo, hi, k)
    return TaylorPoly(a.trust, out_coeffs, rem.lo, rem.hi)


def tp_power(a, m):
    """Integer power by binary exponentiation (squares keep the
    self-product dependency)."""
    if m == 0:
        return TaylorPoly.constant(a.trust, np.ones(a.shape))
    result = None
    base = a
    while m:
        if m & 1:
            result = base if result is None else tp_mul(result, base)
        m >>= 1
        if m:
            base = tp_mul(base, base)
    return result


def tp_range(a, lo=0.0, hi=None):
    """Interval Horner bound of the enclosure over eta in [lo, hi]."""
    hi = a.trust.etabar if hi is None else hi
    elo, ehi = np.float64(lo), np.float64(hi)
    acc_lo, acc_hi = a.rem_lo, a.rem_hi
    for j in range(a.trust.k - 1, -1, -1):
        acc_lo, acc_hi = iv_mul(acc_lo, acc_hi, elo, ehi)
        acc_lo, acc_hi = iv_add(acc_lo, acc_hi, a.coeffs[j], a.coeffs[j])
    return np.broadcast_to(acc_lo, a.shape), np.broadcast_to(acc_hi, a.shape)


def tp_compose(fn, a):
    """Enclosure of fn(a(eta)) via truncated composition.

    z0 is the entrywise center value, the inner range comes from the
    Horner bound over the trust region, and the elementary remainder
    multiplies a truncated enclosure of (a - z0)^k.
    """
    k = a.trust.k
    z0 = np.broadcast_to(a.coeffs[0], a.shape)
    zlo, zhi = tp_range(a)
    zlo = np.minimum(zlo, z0)
    zhi = np.maximum(zhi, z0)
    ig_lo, ig_hi = remainder_arrays(fn, z0, zlo, zhi, k, a.trust.method)
    if not a.trust.bounded and not (np.all(np.isfinite(ig_lo)) and np.all(np.isfinite(ig_hi))):
        raise UnboundedTrust(
            f"{fn} has no bounded remainder over an infinite trust region"
        )
    from .remainders import _deriv_value_pair  # midpoint Taylor coefficients

    dev = TaylorPoly(a.trust, [_zeros_like_entry(a.coeffs[0].shape)] + a.coeffs[1:], a.rem_lo, a.rem_hi)
    out_coeffs = [_zeros_like_entry(a.shape) for _ in range(k)]
    rem = _RemAccum(a.trust, a.shape)
    pw = None
    for i in range(k):
        dlo, dhi = _deriv_value_pair(fn, z0, i)
        ai = 0.5 * (dlo + dhi)
        if i == 0:
            out_coeffs[0] = out_coeffs[0] + ai
            continue
        pw = dev if i == 1 else tp_mul(pw, dev)
        for j in range(k):
            out_coeffs[j] = out_coeffs[j] + ai * pw.coeffs[j]
        if not pw.rem_is_zero():
            lo, hi = iv_scale(pw.rem_lo, pw.rem_hi, ai)
            rem.add_iv(lo, hi, 0)
    pw_k = tp_mul(pw, dev) if k > 1 else dev
    lo, hi = iv_mul(ig_lo, ig_hi, pw_k.rem_lo, pw_k.rem_hi)
    rem.add_iv(lo, hi, 0)
    return TaylorPoly(a.trust, out_coeffs, rem.lo, rem.hi)


def tp_sum(a):
    """Sum all entries into a scalar enclosure."""
    if a.shape == ():
        return a
    coeffs = [np.sum(np.broadcast_to(c, a.shape)) for c in a.coeffs]
    lo = np.sum(np.broadcast_to(a.rem_lo, a.shape))
    hi = np.sum(np.broadcast_to(a.rem_hi, a.shape))
    n = int(np.prod(a.shape))
    mag = np.sum(np.maximum(np.abs(np.broadcast_to(a.rem_lo, a.shape)), np.abs(np.broadcast_to(a.rem_hi, a.shape))))
    err = n * _EPS * (mag if np.isfinite(mag) else 0.0)
    lo = nudge_down(np.where(np.isfinite(lo), lo - err, lo))
    hi = nudge_up(np.where(np.isfinite(hi), hi + err, hi))
    return TaylorPoly(a.trust, coeffs, lo, hi)


def tp_matmul(a, b):
    """Matrix product of entrywise polynomials (contraction over axis)."""
    from ..ivarray import matmul_pair_pair, matmul_pair_point, matmul_point_pair

    _check(a, b)
    k = a.trust.k
    ta, tb = a.top_order(), b.top_order()

    def mm(x, y):
        return x @ y

    out_shape = mm(np.zeros(a.shape), np.zeros(b.shape)).shape
    n_inner = a.shape[-1]
    out_coeffs = [_zeros_like_entry(out_shape) for _ in range(k)]
    rem = _RemAccum(a.trust, out_shape)
    for j in range(min(ta, k - 1) + min(tb, k - 1) + 1):
        val = None
        mag = None
        n = 0
        for p in range(max(0, j - (k - 1)), min(j, k - 1) + 1):
            ca, cb = a.coeffs[p], b.coeffs[j - p]
            if not (np.any(ca) and np.any(cb)):
                continue
            ca = np.broadcast_to(ca, a.shape)
            cb = np.broadcast_to(cb, b.shape)
            term = mm(ca, cb)
            tmag = mm(np.abs(ca), np.abs(cb))
            val = term if val is None else val + term
            mag = tmag if mag is None else mag + tmag
            n += 1
        if val is None:
            continue
        if j < k:
            # kept scalar coefficient: rounding follows the float path
            out_coeffs[j] = val
        else:
            rem.add_scalar_terms(val, mag, n * n_inner, j - k)
    a_rem_zero = a.rem_is_zero()
    b_rem_zero = b.rem_is_zero()
    if not a_rem_zero:
        alo = np.broadcast_to(a.rem_lo, a.shape)
        ahi = np.broadcast_to(a.rem_hi, a.shape)
        for q in range(min(tb, k - 1) + 1):
            if not np.any(b.coeffs[q]):
                continue
            lo, hi = matmul_pair_point(alo, ahi, np.broadcast_to(b.coeffs[q], b.shape))
            rem.add_iv(lo, hi, q)
    if not b_rem_zero:
        blo = np.broadcast_to(b.rem_lo, b.shape)
        bhi = np.broadcast_to(b.rem_hi, b.shape)
        for p in range(min(ta, k - 1) + 1):
            if not np.any(a.coeffs[p]):
                continue
            lo, hi = matmul_point_pair(np.broadcast_to(a.coeffs[p], a.shape), blo, bhi)
            rem.add_iv(lo, hi, p)
    if not a_rem_zero and not b_rem_zero:
        # fold b's eta^k range first, then contract: matches the box
        # engine at d = 1 and keeps the shared-eta correlation
        if not a.trust.bounded:
            raise UnboundedTrust(
                "truncation over an infinite trust region; supply a finite trust bound"
            )
        t = float(nudge_up(np.float64(a.trust.etabar**k)))
        sb_lo, sb_hi = iv_mul(
            np.broadcast_to(b.rem_lo, b.shape),
            np.broadcast_to(b.rem_hi, b.shape),
            np.float64(0.0),
            np.float64(t),
        )
        lo, hi = matmul_pair_pair(
            np.broadcast_to(a.rem_lo, a.shape),
            np.broadcast_to(a.rem_hi, a.shape),
            sb_lo,
            sb_hi,
        )
        rem.add_iv(lo, hi, 0)
    return TaylorPoly(a.trust, out_coeffs, rem.lo, rem.hi)


# -- public scalar view ------------------------------------------------------


@dataclass(frozen=True)
class DirectionalPoly:
    """Scalar degree-k Taylor interval polynomial on trust [0, etabar]."""

    degree: int
    coeffs: tuple
    remainder: Interval
    trust: Interval
    method: str = "sharp"

    def __post_init__(self):
        if len(self.coeffs) != self.degree:
            raise DegreeMismatch("need exactly k scalar coefficients for degree k")
        if self.trust.lo != 0.0:
            raise ValueError("trust region must start at 0")

    def _engine(self):
        t = Trust(self.degree, self.trust.hi, self.method)
        return TaylorPoly(
            t,
            [np.float64(c) for c in self.coeffs],
            np.float64(self.remainder.lo),
            np.float64(self.remainder.hi),
        )

    @classmethod
    def _from_engine(cls, tp):
        return cls(
            tp.trust.k,
            tuple(float(c) for c in tp.coeffs),
            Interval(float(tp.rem_lo), float(tp.rem_hi)),
            Interval(0.0, tp.trust.etabar),
            tp.trust.method,
        )

    def __call__(self, eta, which="upper"):
        poly = upper_poly(self) if which == "upper" else lower_poly(self)
        return float(np.polynomial.polynomial.polyval(eta, poly))


def dpoly_add(p: DirectionalPoly, q: DirectionalPoly) -> DirectionalPoly:
    return DirectionalPoly._from_engine(tp_add(p._engine(), q._engine()))


def dpoly_scale(p: DirectionalPoly, c: float) -> DirectionalPoly:
    return DirectionalPoly._from_engine(tp_scale(p._engine(), float(c)))


def dpoly_mul(p: DirectionalPoly, q: DirectionalPoly) -> DirectionalPoly:
    return DirectionalPoly._from_engine(tp_mul(p._engine(), q._engine()))


def dpoly_compose_elementary(fn, p: DirectionalPoly) -> DirectionalPoly:
    return DirectionalPoly._from_engine(tp_compose(fn, p._engine()))


def range_bound(p: DirectionalPoly, sub: Interval) -> Interval:
    """Interval containing all values of the enclosure over eta in sub."""
    if not (0.0 <= sub.lo and sub.hi <= p.trust.hi):
        raise ValueError("sub-interval must lie inside the trust region")
    lo, hi = tp_range(p._engine(), sub.lo, sub.hi)
    return Interval(float(lo), float(hi))


def upper_poly(p: DirectionalPoly) -> np.ndarray:
    """Majorizer coefficients (c_0, ..., c_{k-1}, rem.hi), low to high."""
    return np.array(list(p.coeffs) + [p.remainder.hi], dtype=np.float64)


def lower_poly(p: DirectionalPoly) -> np.ndarray:
    return np.array(list(p.coeffs) + [p.remainder.lo], dtype=np.float64)
