"""Exact minimization of low-degree polynomials over a closed interval.

Polynomials are coefficient arrays ordered low to high (the RealPoly
representation), degree at most 6.  Roots come from an in-house
shifted-QR iteration on the (at most 5x5) companion matrix, so the step
solver has no external eigensolver dependency.
"""

import math

import numpy as np

from .errors import DegenerateInput

__all__ = [
    "polyval",
    "poly_roots",
    "minimize_quadratic_on_interval",
    "minimize_poly_on_interval",
]

_EPS = np.finfo(np.float64).eps


def polyval(coeffs, x):
    """Evaluate sum_i coeffs[i] * x**i with Horner's rule."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    acc = np.zeros_like(np.asarray(x, dtype=np.float64))
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def _eval_at_signed_inf(coeffs, sign):
    """Limit of the polynomial at +inf (sign=+1) or -inf (sign=-1)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    nz = np.nonzero(coeffs)[0]
    if nz.size == 0:
        return 0.0
    d = nz[-1]
    if d == 0:
        return coeffs[0]
    lead = coeffs[d] * (sign**d if sign < 0 else 1.0)
    return math.inf if lead > 0 else -math.inf


def _eval_endpoint(coeffs, x):
    if math.isinf(x):
        return _eval_at_signed_inf(coeffs, 1 if x > 0 else -1)
    return float(polyval(coeffs, x))


def _deriv(coeffs):
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.size <= 1:
        return np.zeros(1)
    return coeffs[1:] * np.arange(1, coeffs.size)


def _eig2(B):
    tr = B[0, 0] + B[1, 1]
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    disc = np.sqrt(complex(tr * tr - 4.0 * det))
    return [(tr + disc) / 2.0, (tr - disc) / 2.0]


def _house(v):
    """Householder reflector sending v to a multiple of e1."""
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return np.eye(v.size)
    w = v.copy()
    w[0] += math.copysign(norm, v[0]) if v[0] != 0.0 else norm
    return np.eye(v.size) - 2.0 * np.outer(w, w) / (w @ w)


def _francis_sweep(B, s, t):
    """One implicit double-shift QR sweep on a real Hessenberg block.

    s and t are the sum and product of the two shifts (the eigenvalues
    of the trailing 2x2 for standard Wilkinson-pair shifting, zero for
    an unshifted sweep).
    """
    m = B.shape[0]
    x = B[0, 0] * B[0, 0] + B[0, 1] * B[1, 0] - s * B[0, 0] + t
    y = B[1, 0] * (B[0, 0] + B[1, 1] - s)
    z = B[1, 0] * B[2, 1]
    for k in range(m - 2):
        P = _house(np.array([x, y, z]))
        B[k : k + 3, :] = P @ B[k : k + 3, :]
        B[:, k : k + 3] = B[:, k : k + 3] @ P
        x = B[k + 1, k]
        y = B[k + 2, k]
        if k < m - 3:
            z = B[k + 3, k]
    P = _house(np.array([x, y]))
    B[m - 2 : m, :] = P @ B[m - 2 : m, :]
    B[:, m - 2 : m] = B[:, m - 2 : m] @ P


def _hessenberg_eigs(H, unshifted=2):
    """Eigenvalues of a small real upper-Hessenberg matrix.

    Real-arithmetic QR iteration, a few unshifted sweeps first, then
    Wilkinson-pair (Francis double) shifts.  Real eigenvalues deflate
    as exactly-real 1x1 blocks; conjugate pairs come from 2x2 blocks.
    """
    H = np.asarray(H, dtype=np.float64).copy()
    n = H.shape[0]
    eigs = []
    u = n - 1
    sweeps = 0
    stuck = 0
    while u >= 0:
        if u == 0:
            eigs.append(complex(H[0, 0]))
            break
        for i in range(1, u + 1):
            if abs(H[i, i - 1]) <= 1e-14 * (abs(H[i - 1, i - 1]) + abs(H[i, i]) + 1e-300):
                H[i, i - 1] = 0.0
        if H[u, u - 1] == 0.0:
            eigs.append(complex(H[u, u]))
            u -= 1
            stuck = 0
            continue
        if u == 1 or H[u - 1, u - 2] == 0.0:
            eigs.extend(_eig2(H[u - 1 : u + 1, u - 1 : u + 1]))
            u -= 2
            stuck = 0
            continue
        l = u - 1
        while l > 0 and H[l, l - 1] != 0.0:
            l -= 1
        B = H[l : u + 1, l : u + 1]
        if sweeps < unshifted:
            s, t = 0.0, 0.0
        elif stuck and stuck % 12 == 0:
            w = abs(B[-1, -2]) + abs(B[-2, -3])  # exceptional shift pair
            s, t = 2.0 * w, w * w
        else:
            s = B[-2, -2] + B[-1, -1]
            t = B[-2, -2] * B[-1, -1] - B[-2, -1] * B[-1, -2]
        _francis_sweep(B, s, t)
        sweeps += 1
        stuck += 1
        if sweeps > 500:
            eigs.extend(complex(v) for v in np.diag(H[: u + 1, : u + 1]))
            break
    return eigs


def _companion(coeffs):
    coeffs = np.asarray(coeffs, dtype=np.float64)
    n = coeffs.size - 1
    C = np.eye(n, k=-1)
    C[:, -1] = -coeffs[:-1] / coeffs[-1]
    return C


def poly_roots(coeffs):
    """All real roots of the polynomial, sorted ascending.

    Leading coefficients with |c| <= 1e-14 * max|c| are stripped first.
    Eigenvalues of the companion matrix with relative imaginary part
    below 1e-8 are accepted as real, polished by two Newton iterations,
    and deduplicated at relative tolerance 1e-10.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.size == 0 or not np.any(coeffs != 0.0):
        raise DegenerateInput("zero polynomial has no well-defined roots")
    scale = np.max(np.abs(coeffs))
    keep = coeffs.size
    while keep > 1 and abs(coeffs[keep - 1]) <= 1e-14 * scale:
        keep -= 1
    coeffs = coeffs[:keep]
    deg = coeffs.size - 1
    if deg == 0:
        return []
    if deg == 1:
        return [float(-coeffs[0] / coeffs[1])]
    eigs = _hessenberg_eigs(_companion(coeffs))
    spectral = max(1.0, max(abs(e) for e in eigs))
    reals = [float(e.real) for e in eigs if abs(e.imag) <= 1e-8 * spectral]
    dcoeffs = _deriv(coeffs)
    polished = []
    for r in reals:
        x = r
        for _ in range(2):
            px = float(polyval(coeffs, x))
            dpx = float(polyval(dcoeffs, x))
            if dpx == 0.0:
                break
            step = px / dpx
            if not math.isfinite(step):
                break
            x -= step
        if abs(float(polyval(coeffs, x))) <= abs(float(polyval(coeffs, r))):
            polished.append(x)
        else:
            polished.append(r)
    polished.sort()
    out = []
    for x in polished:
        if not out or abs(x - out[-1]) > 1e-10 * spectral:
            out.append(x)
    return out


def minimize_quadratic_on_interval(coeffs, lo, hi):
    """Exact minimizer of c0 + c1 x + c2 x^2 over [lo, hi].

    Convex case clips the vertex onto the interval; otherwise the
    minimum sits at an endpoint (ties resolve to lo).  Infinite
    endpoints are evaluated symbolically.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.size < 3:
        coeffs = np.pad(coeffs, (0, 3 - coeffs.size))
    c0, c1, c2 = float(coeffs[0]), float(coeffs[1]), float(coeffs[2])
    if c2 > 0.0:
        x = -c1 / (2.0 * c2)
        x = min(max(x, lo), hi)
        return x, _eval_endpoint([c0, c1, c2], x)
    flo = _eval_endpoint([c0, c1, c2], lo)
    fhi = _eval_endpoint([c0, c1, c2], hi)
    if flo <= fhi:
        return lo, flo
    return hi, fhi


def minimize_poly_on_interval(coeffs, lo, hi):
    """Minimize a degree <= 6 polynomial over [lo, hi].

    Candidates are the endpoints plus real roots of the derivative
    inside the interval; ties break toward the smallest candidate.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    nz = np.nonzero(np.abs(coeffs) > 1e-14 * max(1e-300, np.max(np.abs(coeffs))))[0]
    deg = int(nz[-1]) if nz.size else 0
    if deg <= 2:
        return minimize_quadratic_on_interval(coeffs[: deg + 1], lo, hi)
    candidates = [lo, hi]
    try:
        roots = poly_roots(_deriv(coeffs))
    except DegenerateInput:
        roots = []
    candidates.extend(r for r in roots if lo <= r <= hi)
    candidates.sort()
    best_x, best_f = None, math.inf
    for x in candidates:
        fx = _eval_endpoint(coeffs, x)
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f
