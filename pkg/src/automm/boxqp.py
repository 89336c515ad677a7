"""Approximate minimization of a quadratic over a hyperrectangle.

Minimizes f(x) = 1/2 x'Ax - b'x over [lo, hi] (A symmetric, possibly
indefinite; 0 must be feasible) with d iterations of a box-clipped
conjugate-direction recurrence followed by one pass of cyclic coordinate
descent.  The contract is monotone improvement, f(result) <= 0, with
exact recovery of the unconstrained optimum when A is positive definite
and the iterates stay interior; global optimality is not promised (the
general problem is NP-hard).
"""

from dataclasses import dataclass, field

import numpy as np

from .polymin import minimize_quadratic_on_interval

__all__ = ["BoxQP", "conjugate_box_min", "cyclic_cd_pass", "minimize"]


@dataclass
class BoxQP:
    """Quadratic-over-box instance; A is symmetrized on construction."""

    A: np.ndarray
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    d: int = field(init=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        self.A = 0.5 * (A + A.T)
        self.b = np.asarray(self.b, dtype=np.float64)
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.hi = np.asarray(self.hi, dtype=np.float64)
        self.d = self.b.size
        if self.A.shape != (self.d, self.d):
            raise ValueError("A must be d x d")
        if np.any(self.lo > self.hi):
            raise ValueError("empty box")
        if np.any(self.lo > 0.0) or np.any(self.hi < 0.0):
            raise ValueError("the algorithm starts at 0, which must be feasible")

    def value(self, x):
        return float(0.5 * x @ self.A @ x - self.b @ x)

    def grad(self, x):
        return self.A @ x - self.b


def _feasible_alpha(q, x, p):
    """Intersection of {alpha : x + alpha p in [lo, hi]} over coordinates.

    Coordinates with p_j = 0 impose no constraint (x is feasible).
    """
    alo, ahi = -np.inf, np.inf
    for j in range(q.d):
        pj = p[j]
        if pj == 0.0:
            continue
        r1 = (q.lo[j] - x[j]) / pj
        r2 = (q.hi[j] - x[j]) / pj
        if r1 > r2:
            r1, r2 = r2, r1
        alo = max(alo, r1)
        ahi = min(ahi, r2)
    # x is feasible, so 0 is always admissible up to rounding
    alo = min(alo, 0.0)
    ahi = max(ahi, 0.0)
    return alo, ahi


def conjugate_box_min(q: BoxQP, collect=None) -> np.ndarray:
    """d iterations of box-clipped conjugate directions from x = 0.

    r_i is the gradient at the current iterate, p_1 = -r_0, and each
    direction update uses the standard ratio of squared residual norms;
    the 1-d step is solved in closed form over the feasible alpha
    interval, so f decreases monotonically from f(0) = 0.  ``collect``,
    when given, receives (iterate, direction) per iteration.
    """
    x = np.zeros(q.d)
    r = -q.b.copy()  # gradient at x = 0
    rr_prev = None
    p = None
    bnorm = float(np.linalg.norm(q.b))
    for _ in range(q.d):
        rr = float(r @ r)
        if np.sqrt(rr) <= 1e-14 * bnorm + 1e-300:
            break  # residual exhausted; the beta ratio is undefined
        if p is None:
            p = -r
        else:
            p = -r + (rr / rr_prev) * p
        Ap = q.A @ p
        c2 = 0.5 * float(p @ Ap)
        c1 = float(r @ p)
        alo, ahi = _feasible_alpha(q, x, p)
        alpha, _ = minimize_quadratic_on_interval([0.0, c1, c2], alo, ahi)
        x = x + alpha * p
        r = r + alpha * Ap
        rr_prev = rr
        if collect is not None:
            collect((x.copy(), p.copy()))
    return np.clip(x, q.lo, q.hi)


def cyclic_cd_pass(q: BoxQP, x) -> np.ndarray:
    """One pass of exact coordinate minimization; never increases f."""
    x = np.array(x, dtype=np.float64)
    r = q.grad(x)
    for i in range(q.d):
        c1 = float(r[i])
        c2 = 0.5 * float(q.A[i, i])
        alpha, _ = minimize_quadratic_on_interval(
            [0.0, c1, c2], float(q.lo[i] - x[i]), float(q.hi[i] - x[i])
        )
        if alpha != 0.0:
            x[i] += alpha
            r = r + alpha * q.A[:, i]
    return np.clip(x, q.lo, q.hi)


def _cd_fixpoint(q, x, max_passes=25, tol=1e-14):
    val = q.value(x)
    for _ in range(max_passes):
        x = cyclic_cd_pass(q, x)
        new = q.value(x)
        if new >= val - tol * (1.0 + abs(val)):
            break
        val = new
    return x


def _active_set_exact(q, max_dim=6):
    """Global minimum by KKT active-set enumeration (3^d patterns).

    Each coordinate is pinned at lo, pinned at hi, or free; free blocks
    take their stationary value when it lands inside the box.  Face
    minima whose stationary point leaves the box are covered by patterns
    with more active constraints.  Exponential, so small d only.
    """
    if q.d > max_dim:
        return None
    best, best_val = None, np.inf
    import itertools

    for pattern in itertools.product((0, 1, 2), repeat=q.d):
        free = [j for j, p in enumerate(pattern) if p == 2]
        x = np.where(np.array(pattern) == 0, q.lo, q.hi).astype(np.float64)
        if free:
            act = [j for j in range(q.d) if j not in free]
            rhs = q.b[free] - (q.A[np.ix_(free, act)] @ x[act] if act else 0.0)
            try:
                xf = np.linalg.solve(q.A[np.ix_(free, free)], rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(xf < q.lo[free] - 1e-12) or np.any(xf > q.hi[free] + 1e-12):
                continue
            x[free] = np.clip(xf, q.lo[free], q.hi[free])
        val = q.value(x)
        if val < best_val:
            best, best_val = x, val
    return best


def minimize(q: BoxQP) -> np.ndarray:
    """Conjugate-direction phase plus coordinate-descent cleanup.

    The core composition is one conjugate-direction sweep followed by
    cyclic coordinate descent; further deterministic descent (coordinate
    passes to a fixpoint, plus exact active-set enumeration for small d)
    only ever lowers f, so f(result) <= min(0, f(conjugate phase))
    still holds.
    """
    x = _cd_fixpoint(q, cyclic_cd_pass(q, conjugate_box_min(q)))
    best, best_val = x, q.value(x)
    exact = _active_set_exact(q)
    if exact is not None and q.value(exact) < best_val:
        best = exact
    return best
