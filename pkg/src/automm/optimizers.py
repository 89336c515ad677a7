"""Loss-monotone step-size optimizers and the Table-style baselines.

SafeRate picks, per step, the learning rate minimizing an automatically
derived degree-k polynomial majorizer of h(eta) = f(x + eta v) over an
adaptive trust region [0, etabar]; SafeCombination generalizes to a
vector of weights on d update directions using a quadratic enclosure
minimized over a box.  Both guarantee f(x_{t+1}) <= f(x_t).

The polynomial upper bound is pluggable: the default is the enclosure
propagator, and an analytic beta-smoothness bound is shipped for the
convergence-guarantee harness.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import expr
from .boxqp import BoxQP
from .boxqp import minimize as boxqp_minimize
from .enclosure import propagate_directional, propagate_quadratic, upper_poly
from .errors import AutommError
from .polymin import minimize_poly_on_interval

__all__ = [
    "DirectionOracle",
    "TrustRegion",
    "RunTrace",
    "OptimizerSpec",
    "enclosure_bound",
    "beta_smooth_bound",
    "saferate_step",
    "safecombination_step",
    "baseline_step",
    "run",
    "theorem1_harness",
]

STALL_LIMIT = 50


# -- parameter trees ---------------------------------------------------------


def tree_dot(a, b):
    return sum(float(np.sum(a[k] * b[k])) for k in a)


def tree_norm(a):
    return math.sqrt(max(tree_dot(a, a), 0.0))


def tree_add_scaled(x, v, eta):
    return {k: x[k] + eta * v[k] for k in x}


def tree_scale(a, c):
    return {k: c * a[k] for k in a}


# -- direction oracles -------------------------------------------------------


class DirectionOracle:
    """Maps the gradient history to an update direction.

    gd returns the negative gradient; adagrad and adam return their
    canonical updates (adam bias-corrected) scaled by a fixed internal
    rate.  The oracle sees only iterates and gradients, never f.
    """

    def __init__(self, kind, scale=0.1, beta1=0.9, beta2=0.999, eps=1e-8, delta=0.0):
        if kind not in ("gd", "adagrad", "adam"):
            raise ValueError(f"unknown oracle kind {kind!r}")
        self.kind = kind
        self.scale = scale
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.delta = delta
        self.reset()

    def reset(self):
        self.t = 0
        self._acc = None
        self._m = None
        self._v = None

    def direction(self, x, g):
        self.t += 1
        if self.kind == "gd":
            return {k: -g[k] for k in g}
        if self.kind == "adagrad":
            if self._acc is None:
                self._acc = {k: np.zeros_like(v) for k, v in g.items()}
            out = {}
            for k, gk in g.items():
                self._acc[k] = self._acc[k] + gk * gk
                denom = np.sqrt(self._acc[k]) + self.delta
                safe = np.where(denom > 0.0, denom, 1.0)  # 0/0 -> 0 at untouched coords
                out[k] = -self.scale * np.where(denom > 0.0, gk / safe, 0.0)
            return out
        # adam
        if self._m is None:
            self._m = {k: np.zeros_like(v) for k, v in g.items()}
            self._v = {k: np.zeros_like(v) for k, v in g.items()}
        out = {}
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for k, gk in g.items():
            self._m[k] = self.beta1 * self._m[k] + (1.0 - self.beta1) * gk
            self._v[k] = self.beta2 * self._v[k] + (1.0 - self.beta2) * gk * gk
            mhat = self._m[k] / bc1
            vhat = self._v[k] / bc2
            out[k] = -self.scale * mhat / (np.sqrt(vhat) + self.eps)
        return out


def direction_matrix(oracle, x, g, names):
    """Direction stack for SafeCombination.

    With a direction oracle: one masked column per parameter tensor
    (per-layer directions).  With oracle None: the identity matrix over
    the flattened parameters, one coordinate direction per entry.
    """
    if oracle is None:
        d = sum(int(np.size(x[k])) for k in names)
        U = {k: np.zeros((d,) + np.shape(x[k])) for k in x}
        i = 0
        for name in names:
            flat = U[name].reshape(d, -1)
            for j in range(int(np.size(x[name]))):
                flat[i, j] = 1.0
                i += 1
        return U
    full = oracle.direction(x, g)
    U = {}
    d = len(names)
    for k in x:
        U[k] = np.zeros((d,) + np.shape(x[k]))
    for i, name in enumerate(names):
        U[name][i] = full[name]
    return U


# -- trust regions and traces ------------------------------------------------


@dataclass
class TrustRegion:
    """Adaptive trust bound; scalar for SafeRate, vector for SafeCombination."""

    etabar: object
    allow_infinite: bool = False

    def __post_init__(self):
        if np.ndim(self.etabar) == 0:
            self.etabar = float(self.etabar)
            if not self.etabar > 0.0:
                raise ValueError("trust bound must be positive")
            if math.isinf(self.etabar) and not self.allow_infinite:
                raise ValueError("infinite trust requires allow_infinite")
        else:
            self.etabar = np.asarray(self.etabar, dtype=np.float64)
            if not np.all(np.isfinite(self.etabar)) or not np.all(self.etabar > 0.0):
                raise ValueError("vector trust must be finite and positive")

    def doubled_or_halved(self, eta):
        """The doubling/halving rule, elementwise for vector trusts."""
        if np.ndim(self.etabar) == 0:
            new = 2.0 * self.etabar if eta >= 0.5 * self.etabar else 0.5 * self.etabar
            return replace(self, etabar=new)
        grow = np.asarray(eta) >= 0.5 * self.etabar
        return replace(self, etabar=np.where(grow, 2.0 * self.etabar, 0.5 * self.etabar))


@dataclass
class RunTrace:
    """Per-step records backing every experiment artifact."""

    loss: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    eta: list = field(default_factory=list)
    etabar: list = field(default_factory=list)
    points_evaluated: list = field(default_factory=list)
    elapsed_s: list = field(default_factory=list)
    flags: set = field(default_factory=set)

    def append(self, loss, grad_norm, eta, etabar, points, elapsed):
        self.loss.append(loss)
        self.grad_norm.append(grad_norm)
        self.eta.append(eta)
        self.etabar.append(etabar)
        self.points_evaluated.append(points)
        self.elapsed_s.append(elapsed)

    def __len__(self):
        return len(self.loss)


@dataclass
class StepRecord:
    loss_before: float
    grad_norm: float
    eta: object
    etabar: object
    grad_evals: int = 1
    propagations: int = 1


# -- polynomial upper-bound providers -----------------------------------------


def enclosure_bound(k, method="sharp"):
    """PolynomialUpperBound backed by the enclosure propagator."""

    def provider(f, x, v, g, etabar):
        h = expr.line_restrict(f, x, v)
        poly = propagate_directional(h, etabar, k, method)
        return upper_poly(poly)

    return provider


def beta_smooth_bound(beta):
    """Analytic bound from beta-smoothness (for the guarantee harness):
    P(eta) = f(x) + eta g'v + (beta/2) eta^2 ||v||^2."""

    def provider(f, x, v, g, etabar):
        fx = expr.evaluate(f, x)
        c1 = tree_dot(g, v)
        c2 = 0.5 * beta * tree_dot(v, v)
        return np.array([fx, c1, c2])

    return provider


# -- MM steps ------------------------------------------------------------------


def saferate_step(f, x, oracle, tr: TrustRegion, k=2, method="sharp", bound_provider=None):
    """One SafeRate iteration.

    Computes g, asks the oracle for a direction, derives a degree-k
    polynomial majorizer of h(eta) = f(x + eta v) on [0, etabar], steps
    to its argmin and doubles/halves the trust bound.  Guarantees
    f(x_next) <= f(x).
    """
    if bound_provider is None:
        bound_provider = enclosure_bound(k, method)
    g = expr.gradient_all(f, x)
    v = oracle.direction(x, g)
    coeffs = bound_provider(f, x, v, g, tr.etabar)
    eta, _ = minimize_poly_on_interval(coeffs, 0.0, tr.etabar)
    if not math.isfinite(eta):
        raise AutommError("majorizer has no finite minimizer on the trust region")
    x_next = tree_add_scaled(x, v, eta)
    record = StepRecord(
        loss_before=float(coeffs[0]),
        grad_norm=tree_norm(g),
        eta=eta,
        etabar=tr.etabar,
    )
    return x_next, eta, tr.doubled_or_halved(eta), record


def safecombination_step(f, x, oracle, tr: TrustRegion, method="sharp", names=None):
    """One SafeCombination iteration over d update directions.

    The quadratic enclosure's upper matrix is minimized over the box
    [0, etabar] by the conjugate-direction box solver; the trust bound
    adapts per coordinate.  Guarantees f(x_next) <= f(x).
    """
    names = list(x) if names is None else names
    g = expr.gradient_all(f, x)
    U = direction_matrix(oracle, x, g, names)
    d = next(iter(U.values())).shape[0]
    h = expr.subspace_restrict(f, x, U, d)
    q = propagate_quadratic(h, tr.etabar, method)
    A = 2.0 * q.upper_matrix()
    qp = BoxQP(A, -q.c1, np.zeros(d), tr.etabar)
    eta = boxqp_minimize(qp)
    x_next = {k: x[k] + np.tensordot(eta, U[k], axes=([0], [0])) for k in x}
    record = StepRecord(
        loss_before=q.c0,
        grad_norm=tree_norm(g),
        eta=eta,
        etabar=np.array(tr.etabar, copy=True),
    )
    return x_next, eta, tr.doubled_or_halved(eta), record


# -- baselines -----------------------------------------------------------------


class BaselineState:
    def __init__(self, kind, lr=0.1, alpha0=1.0, beta1=0.9, beta2=0.999, eps=1e-8, delta=0.0):
        self.kind = kind
        self.lr = lr
        self.alpha0 = alpha0
        self.oracle = DirectionOracle(kind, scale=lr, beta1=beta1, beta2=beta2, eps=eps, delta=delta) \
            if kind in ("adagrad", "adam") else None


def baseline_step(state: BaselineState, f, x):
    """One step of gd / adagrad / adam / backtracking.

    Returns (x_next, eta, points_evaluated, grad_norm, loss_before).
    Backtracking counts every trial point per the step-counting
    convention.
    """
    g = expr.gradient_all(f, x)
    gnorm = tree_norm(g)
    loss = expr.evaluate(f, x)
    if state.kind == "gd":
        x_next = tree_add_scaled(x, g, -state.lr)
        return x_next, state.lr, 1, gnorm, loss
    if state.kind in ("adagrad", "adam"):
        v = state.oracle.direction(x, g)
        x_next = tree_add_scaled(x, v, 1.0)
        return x_next, state.lr, 1, gnorm, loss
    if state.kind == "backtracking":
        if gnorm == 0.0:
            return dict(x), 0.0, 1, gnorm, loss
        alpha = state.alpha0
        trials = 0
        gg = gnorm * gnorm
        while trials < 400:
            trials += 1
            cand = tree_add_scaled(x, g, -alpha)
            f_cand = expr.evaluate(f, cand)
            if f_cand <= loss - 0.5 * alpha * gg:
                return cand, alpha, trials, gnorm, loss
            alpha *= 0.5
        return dict(x), 0.0, trials, gnorm, loss
    raise ValueError(f"unknown baseline {state.kind!r}")


# -- run loop ------------------------------------------------------------------


@dataclass
class OptimizerSpec:
    """Which optimizer to run and with what knobs."""

    kind: str  # saferate | safecombination | gd | adagrad | adam | backtracking
    oracle: str = "gd"
    lr: float = 0.1
    alpha0: float = 1.0
    k: int = 2
    method: str = "sharp"
    etabar0: float | None = None

    def label(self):
        if self.kind == "saferate":
            return f"SafeRate[{self.oracle.upper() if self.oracle == 'gd' else self.oracle.capitalize()}]"
        if self.kind == "safecombination":
            return f"SafeCombination[per-layer {self.oracle.upper() if self.oracle == 'gd' else self.oracle.capitalize()}]"
        if self.kind == "backtracking":
            return f"Backtracking[{self.alpha0:g}]"
        return f"{self.kind}[{self.lr:g}]"


def run(f, x1, spec: OptimizerSpec, steps: int) -> RunTrace:
    """Execute a full optimization run; deterministic given its inputs.

    The trace's row t holds the state after step t (row 0 is the initial
    point); a loss that stops being finite flags the run as diverged and
    stops stepping; 50 consecutive zero steps with nonzero gradient flag
    a stall but do not stop the run.
    """
    trace = RunTrace()
    x = {k: np.array(v, dtype=np.float64) for k, v in x1.items()}
    start = time.perf_counter()
    loss0 = expr.evaluate(f, x)
    g0 = tree_norm(expr.gradient_all(f, x))
    points = 1

    if spec.kind == "saferate":
        etabar0 = 1.0 if spec.etabar0 is None else spec.etabar0
        tr = TrustRegion(etabar0, allow_infinite=math.isinf(etabar0))
        oracle = DirectionOracle(spec.oracle)
        trace.append(loss0, g0, 0.0, tr.etabar, points, time.perf_counter() - start)
        zero_streak = 0
        for _ in range(steps):
            try:
                x, eta, tr_next, rec = saferate_step(f, x, oracle, tr, spec.k, spec.method)
            except AutommError as exc:
                trace.flags.add(f"error:{exc}")
                break
            loss = expr.evaluate(f, x)
            points += 1
            trace.append(loss, rec.grad_norm, eta, rec.etabar, points, time.perf_counter() - start)
            tr = tr_next
            zero_streak = zero_streak + 1 if (eta == 0.0 and rec.grad_norm > 0.0) else 0
            if zero_streak >= STALL_LIMIT:
                trace.flags.add("stalled")
            if not math.isfinite(loss):
                trace.flags.add("diverged")
                break
    elif spec.kind == "safecombination":
        names = list(x)
        oracle = None if spec.oracle == "identity" else DirectionOracle(spec.oracle)
        d = sum(int(np.size(v)) for v in x.values()) if oracle is None else len(names)
        etabar0 = np.ones(d) if spec.etabar0 is None else np.full(d, spec.etabar0)
        tr = TrustRegion(etabar0)
        trace.append(loss0, g0, (0.0,) * d, tuple(tr.etabar), points, time.perf_counter() - start)
        zero_streak = 0
        for _ in range(steps):
            try:
                x, eta, tr_next, rec = safecombination_step(f, x, oracle, tr, spec.method, names)
            except AutommError as exc:
                trace.flags.add(f"error:{exc}")
                break
            loss = expr.evaluate(f, x)
            points += 1
            trace.append(loss, rec.grad_norm, tuple(eta), tuple(rec.etabar), points, time.perf_counter() - start)
            tr = tr_next
            zero_streak = zero_streak + 1 if (np.all(eta == 0.0) and rec.grad_norm > 0.0) else 0
            if zero_streak >= STALL_LIMIT:
                trace.flags.add("stalled")
            if not math.isfinite(loss):
                trace.flags.add("diverged")
                break
    else:
        state = BaselineState(spec.kind, lr=spec.lr, alpha0=spec.alpha0)
        trace.append(loss0, g0, 0.0, 0.0, points, time.perf_counter() - start)
        for _ in range(steps):
            x, eta, n_points, gnorm, _ = baseline_step(state, f, x)
            loss = expr.evaluate(f, x)
            points += n_points
            trace.append(loss, gnorm, eta, 0.0, points, time.perf_counter() - start)
            if not math.isfinite(loss):
                trace.flags.add("diverged")
                break
    return trace


# -- convergence-guarantee harness ---------------------------------------------


def theorem1_harness(f, x1, beta, T):
    """Run SafeRate with the injected beta-smooth quadratic bound.

    With v = -g and P(eta) = f + eta g'v + (beta/2) eta^2 ||v||^2 the
    chosen step is 1/beta on every iteration (trust starts at 1 and the
    doubling/halving rule keeps etabar >= 1/beta), and the minimum
    squared gradient norm after T steps is at most
    2 beta (f(x_1) - f(x_{T+1})) / T.
    """
    if beta < 1.0:
        raise ValueError("the guarantee needs beta >= 1")
    provider = beta_smooth_bound(beta)
    oracle = DirectionOracle("gd")
    tr = TrustRegion(1.0)
    x = {k: np.array(v, dtype=np.float64) for k, v in x1.items()}
    etas = []
    losses = [expr.evaluate(f, x)]
    grad_norms = []
    for _ in range(T):
        x, eta, tr, rec = saferate_step(f, x, oracle, tr, bound_provider=provider)
        etas.append(eta)
        grad_norms.append(rec.grad_norm)
        losses.append(expr.evaluate(f, x))
    bound_ok = []
    for t in range(1, T + 1):
        min_g2 = min(gn * gn for gn in grad_norms[:t])
        rhs = 2.0 * beta * (losses[0] - losses[t]) / t
        bound_ok.append(min_g2 <= rhs + 1e-12 * (1.0 + abs(rhs)))
    return {
        "etas": etas,
        "losses": losses,
        "grad_norms": grad_norms,
        "bound_ok": bound_ok,
    }
