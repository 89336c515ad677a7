"""Closed scalar intervals and elementwise tensor intervals.

Endpoints are float64; outward rounding nudges each endpoint one ulp
after every primitive operation, with two exactness carve-outs so that
algebraic identities hold bit-for-bit: a degenerate zero operand
(addition identity / multiplication annihilator) and a degenerate one
factor.  Inside products, ``0 * inf = 0``.  Unbounded endpoints are
legal; NaN endpoints are rejected.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import funcs
from ._kernels import iv_add as _kadd
from ._kernels import iv_mul as _kmul
from .errors import DomainError, ShapeError

__all__ = [
    "Interval",
    "TensorInterval",
    "iv_add",
    "iv_sub",
    "iv_mul",
    "iv_scale",
    "iv_div",
    "iv_hull",
    "iv_pow",
    "iv_monotone_image",
    "ti_inner",
    "outer_power",
]

_MAX_RANK = 4


@dataclass(frozen=True, slots=True)
class Interval:
    """Closed real interval [lo, hi]; lo <= hi, endpoints may be infinite."""

    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("NaN interval endpoint")
        if self.lo > self.hi:
            raise ValueError(f"inverted interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value):
        return cls(value, value)

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, x):
        return self.lo <= x <= self.hi

    def is_bounded(self):
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def __repr__(self):
        return f"[{self.lo:.17g}, {self.hi:.17g}]"


def _from_pair(lo, hi):
    return Interval(float(lo), float(hi))


def iv_add(a: Interval, b: Interval) -> Interval:
    lo, hi = _kadd(np.float64(a.lo), np.float64(a.hi), np.float64(b.lo), np.float64(b.hi))
    return _from_pair(lo, hi)


def iv_sub(a: Interval, b: Interval) -> Interval:
    return iv_add(a, Interval(-b.hi, -b.lo))


def iv_mul(a: Interval, b: Interval) -> Interval:
    lo, hi = _kmul(np.float64(a.lo), np.float64(a.hi), np.float64(b.lo), np.float64(b.hi))
    return _from_pair(lo, hi)


def iv_scale(i: Interval, z: float) -> Interval:
    """Interval times scalar: [min(lo*z, hi*z), max(lo*z, hi*z)]."""
    if not math.isfinite(z):
        raise ValueError("iv_scale requires a finite scalar")
    return iv_mul(i, Interval.point(z))


def iv_div(a: Interval, b: Interval) -> Interval:
    """Division by a sign-definite interval (0 not in b)."""
    if b.lo <= 0.0 <= b.hi:
        raise DomainError("interval division by an interval containing zero")
    rl = math.nextafter(1.0 / b.hi, -math.inf)
    rh = math.nextafter(1.0 / b.lo, math.inf)
    return iv_mul(a, Interval(rl, rh))


def iv_hull(*items) -> Interval:
    lo = min(i.lo for i in items)
    hi = max(i.hi for i in items)
    return Interval(lo, hi)


def iv_intersect(a: Interval, b: Interval) -> Interval:
    lo = max(a.lo, b.lo)
    hi = min(a.hi, b.hi)
    if lo > hi:
        raise ValueError(f"empty intersection of {a} and {b}")
    return Interval(lo, hi)


def iv_pow(i: Interval, m: int) -> Interval:
    """Integer power of an interval (image of z^m)."""
    if m < 0:
        raise DomainError("negative integer power")
    if m == 0:
        return Interval(1.0, 1.0)
    if m == 1:
        return i
    if m % 2 == 1 or i.lo >= 0.0:
        lo, hi = i.lo, i.hi
    elif i.hi <= 0.0:
        lo, hi = i.hi, i.lo
    else:  # even power straddling zero
        return Interval(0.0, math.nextafter(max(i.lo**m, i.hi**m), math.inf))
    plo, phi = lo**m, hi**m
    return Interval(
        math.nextafter(min(plo, phi), -math.inf) if plo != 0.0 and phi != 0.0 else min(plo, phi),
        math.nextafter(max(plo, phi), math.inf),
    )


def _monotone_endpoints(fn, i: Interval) -> Interval:
    vlo = float(funcs.apply_fn(fn, np.float64(i.lo)))
    vhi = float(funcs.apply_fn(fn, np.float64(i.hi)))
    return Interval(math.nextafter(vlo, -math.inf), math.nextafter(vhi, math.inf))


def iv_monotone_image(i: Interval, fn, exponent: int | None = None) -> Interval:
    """Image of an interval under an elementary function.

    ``fn`` is one of "exp", "log", "softplus", "sigmoid", "pow" (with
    ``exponent``).  Monotone functions use endpoint evaluation; even
    integer powers of sign-straddling intervals bottom out at 0.
    """
    if fn == "pow":
        if exponent is None:
            raise ValueError("pow image needs an exponent")
        return iv_pow(i, exponent)
    if fn == "log":
        if i.lo <= 0.0:
            raise DomainError(f"log of interval {i} not within (0, inf)")
        return _monotone_endpoints("log", i)
    if fn == "exp":
        out = _monotone_endpoints("exp", i)
        return Interval(max(out.lo, 0.0), out.hi)
    if fn == "softplus":
        out = _monotone_endpoints("softplus", i)
        return Interval(max(out.lo, 0.0), out.hi)
    if fn == "sigmoid":
        out = _monotone_endpoints("sigmoid", i)
        return Interval(min(max(out.lo, 0.0), 1.0), min(out.hi, 1.0))
    raise ValueError(f"unknown elementary function {fn!r}")


@dataclass(frozen=True)
class TensorInterval:
    """Elementwise interval between two equal-shape dense tensors."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.ascontiguousarray(self.lo, dtype=np.float64)
        hi = np.ascontiguousarray(self.hi, dtype=np.float64)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != hi.shape:
            raise ShapeError(f"endpoint shapes differ: {lo.shape} vs {hi.shape}")
        if lo.ndim > _MAX_RANK:
            raise ShapeError(f"rank {lo.ndim} exceeds supported rank {_MAX_RANK}")
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise ValueError("NaN tensor interval endpoint")
        if np.any(lo > hi):
            raise ValueError("inverted tensor interval")

    @classmethod
    def point(cls, values):
        values = np.asarray(values, dtype=np.float64)
        return cls(values, values.copy())

    @property
    def shape(self):
        return self.lo.shape

    def contains(self, x, slack=0.0):
        return bool(np.all(self.lo - slack <= x) and np.all(x <= self.hi + slack))


def ti_inner(a: TensorInterval, b) -> "TensorInterval | Interval":
    """Inner product contracting a's trailing axes with point tensor b.

    Each output entry contains every inner product attainable by member
    tensors of ``a``.  Returns a scalar :class:`Interval` for rank-0
    results.
    """
    b = np.asarray(b, dtype=np.float64)
    q = b.ndim
    r = a.lo.ndim
    if q > r or a.shape[r - q :] != b.shape:
        raise ShapeError(f"cannot contract {a.shape} with {b.shape}")
    bp = np.maximum(b, 0.0)
    bn = np.minimum(b, 0.0)

    def guarded(x, y):
        p = x * y
        return np.where(np.isnan(p), 0.0, p)

    cl = guarded(a.lo, bp) + guarded(a.hi, bn)
    ch = guarded(a.hi, bp) + guarded(a.lo, bn)
    axes = tuple(range(r - q, r)) if q else ()
    if axes:
        mag = np.sum(np.maximum(np.abs(cl), np.abs(ch)), axis=axes)
        n = int(np.prod(b.shape))
        lo = np.sum(cl, axis=axes)
        hi = np.sum(ch, axis=axes)
        err = (n + 1) * np.finfo(np.float64).eps * np.where(np.isfinite(mag), mag, 0.0)
        lo = np.nextafter(np.where(np.isfinite(lo), lo - err, lo), -np.inf)
        hi = np.nextafter(np.where(np.isfinite(hi), hi + err, hi), np.inf)
    else:
        lo, hi = cl, ch
    if lo.ndim == 0:
        return Interval(float(lo), float(hi))
    return TensorInterval(lo, hi)


def outer_power(v, k: int):
    """Repeated outer product of a rank-1 tensor; k = 0 gives scalar 1."""
    if k < 0:
        raise ValueError("outer power needs k >= 0")
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError("outer_power expects a rank-1 tensor")
    out = np.float64(1.0)
    for _ in range(k):
        out = np.multiply.outer(out, v) if np.ndim(out) else np.multiply.outer(np.float64(out), v)
    if np.ndim(out) == 0:
        return float(out)
    return np.asarray(out)
