import math

import numpy as np
import pytest

from automm import expr
from automm.enclosure import (
    DirectionalPoly,
    dpoly_add,
    dpoly_compose_elementary,
    dpoly_mul,
    dpoly_scale,
    elementary_remainder,
    lower_poly,
    propagate_directional,
    propagate_quadratic,
    range_bound,
    upper_poly,
)
from automm.errors import UnboundedTrust, UnsupportedDegree
from automm.expr import ExprGraph, constant, evaluate, line_restrict, subspace_restrict, var
from automm.intervals import Interval
from automm.polymin import polyval


def exact_poly(coeffs, etabar, k=2):
    """DirectionalPoly for an exact polynomial of degree < k."""
    coeffs = list(coeffs) + [0.0] * (k - len(coeffs))
    return DirectionalPoly(k, tuple(coeffs[:k]), Interval(0, 0), Interval(0, etabar))


def sample_containment(p, h, n=500, slack=1e-9):
    etas = np.linspace(0.0, p.trust.hi, n)
    up = upper_poly(p)
    lo = lower_poly(p)
    for eta in etas:
        val = h(eta)
        s = slack * (1.0 + abs(val))
        assert polyval(up, eta) >= val - s, f"upper bound fails at eta={eta}"
        assert polyval(lo, eta) <= val + s, f"lower bound fails at eta={eta}"


# -- elementary remainders ----------------------------------------------------


def test_softplus_k2_remainder_capped_at_eighth():
    rng = np.random.default_rng(0)
    for _ in range(100):
        z0 = float(rng.normal(scale=3.0))
        lo = z0 - float(rng.uniform(0.01, 5.0))
        hi = z0 + float(rng.uniform(0.01, 5.0))
        for method in ("lagrange", "sharp"):
            r = elementary_remainder("softplus", z0, Interval(lo, hi), 2, method)
            assert r.hi <= 0.125 + 1e-12
            assert r.lo >= -0.125 - 1e-12


def test_exp_degenerate_range_gives_limit_value():
    r = elementary_remainder("exp", 0.0, Interval(0.0, 0.0), 2, "sharp")
    assert r.lo <= 0.5 <= r.hi
    assert r.width <= 4 * np.finfo(float).eps


def test_exp_sharp_vs_lagrange_endpoints():
    sharp = elementary_remainder("exp", 0.0, Interval(0.0, 1.0), 2, "sharp")
    lag = elementary_remainder("exp", 0.0, Interval(0.0, 1.0), 2, "lagrange")
    assert sharp.hi == pytest.approx(math.e - 2.0, rel=1e-12)
    assert lag.hi == pytest.approx(math.e / 2.0, rel=1e-12)
    assert lag.lo <= sharp.lo and sharp.hi <= lag.hi


def dense_remainder_check(fn, z0, zlo, zhi, k, method, n=2000):
    """Sampling oracle: fn(z) must lie inside T_{k-1}(z) + I (z-z0)^k."""
    from automm.funcs import apply_fn

    r = elementary_remainder(fn, z0, Interval(zlo, zhi), k, method)
    # Taylor coefficients by central finite differences of high order are
    # noisy; use the analytic derivative polynomials via the remainder
    # module itself at degenerate range (order i remainder = f^(i)/i!).
    coeffs = []
    for i in range(k):
        if i == 0:
            coeffs.append(float(apply_fn(fn, np.float64(z0))))
        else:
            ri = elementary_remainder(fn, z0, Interval(z0, z0), i, "lagrange") if i >= 2 else None
            if i == 1:
                from automm.funcs import apply_fn_deriv

                coeffs.append(float(apply_fn_deriv(fn, np.float64(z0))))
            else:
                coeffs.append(0.5 * (ri.lo + ri.hi))
    for z in np.linspace(zlo, zhi, n):
        t = sum(c * (z - z0) ** i for i, c in enumerate(coeffs))
        val = float(apply_fn(fn, np.float64(z)))
        lo = t + min(r.lo * (z - z0) ** k, r.hi * (z - z0) ** k)
        hi = t + max(r.lo * (z - z0) ** k, r.hi * (z - z0) ** k)
        s = 1e-9 * (1.0 + abs(val))
        assert lo - s <= val <= hi + s, f"{fn} {method} fails at z={z}: {lo} {val} {hi}"


@pytest.mark.parametrize("fn,z0,zlo,zhi", [
    ("exp", 0.0, 0.0, 1.0),
    ("exp", -0.5, -2.0, 1.5),
    ("log", 1.0, 0.25, 4.0),
    ("softplus", 0.3, -2.0, 5.0),
    ("sigmoid", -0.7, -4.0, 2.0),
])
@pytest.mark.parametrize("k", [2, 3, 4])
@pytest.mark.parametrize("method", ["lagrange", "sharp"])
def test_remainder_containment(fn, z0, zlo, zhi, k, method):
    dense_remainder_check(fn, z0, zlo, zhi, k, method)


def test_remainder_rejects_bad_degrees():
    with pytest.raises(UnsupportedDegree):
        elementary_remainder("exp", 0.0, Interval(0.0, 1.0), 7, "lagrange")
    with pytest.raises(UnsupportedDegree):
        elementary_remainder("exp", 0.0, Interval(0.0, 1.0), 1, "lagrange")


def test_sharp_nested_in_lagrange_randomized():
    rng = np.random.default_rng(3)
    for _ in range(200):
        fn = str(rng.choice(["exp", "softplus", "sigmoid", "log"]))
        z0 = float(rng.uniform(0.5, 3.0)) if fn == "log" else float(rng.normal(scale=2.0))
        lo = z0 - float(rng.uniform(0.0, 2.0))
        hi = z0 + float(rng.uniform(0.001, 2.0))
        if fn == "log":
            lo = max(lo, 0.05)
        k = int(rng.integers(2, 7))
        s = elementary_remainder(fn, z0, Interval(lo, hi), k, "sharp")
        l = elementary_remainder(fn, z0, Interval(lo, hi), k, "lagrange")
        assert l.lo <= s.lo and s.hi <= l.hi


# -- directional polynomial algebra -------------------------------------------


def test_dpoly_add_zero_identity():
    p = DirectionalPoly(2, (1.5, -0.5), Interval(-0.25, 1.0), Interval(0, 2.0))
    zero = exact_poly([0.0], 2.0)
    assert dpoly_add(p, zero) == p


def test_dpoly_scale_flips_remainder():
    p = DirectionalPoly(2, (1.5, -0.5), Interval(-0.25, 1.0), Interval(0, 2.0))
    q = dpoly_scale(p, -1.0)
    assert q.remainder.lo == -1.0 and q.remainder.hi == 0.25
    assert q.coeffs == (-1.5, 0.5)


def test_dpoly_mul_eta_squared():
    eta = exact_poly([0.0, 1.0], 1.0)
    sq = dpoly_mul(eta, eta)
    assert sq.coeffs == (0.0, 0.0)
    assert sq.remainder.lo <= 1.0 <= sq.remainder.hi
    assert sq.remainder.width <= 4 * np.finfo(float).eps


def test_dpoly_mul_identity():
    p = DirectionalPoly(2, (0.7, -0.2), Interval(-0.1, 0.3), Interval(0, 1.5))
    one = exact_poly([1.0], 1.5)
    assert dpoly_mul(p, one) == p
    assert dpoly_mul(one, p) == p


def sound_enclosure_of(fn_graph, x0, v, etabar, k, method="sharp"):
    h = line_restrict(fn_graph, x0, v)
    return propagate_directional(h, etabar, k, method), h


def test_dpoly_add_mul_sampling_oracle():
    # build sound enclosures of exp(eta) and sigmoid(2 eta), then check
    # sums/products against the true functions pointwise
    x = var("x", ())
    ge = ExprGraph(expr.exp(x))
    gs = ExprGraph(expr.sigmoid(constant(2.0) * x))
    for k in (2, 3):
        pe, he = sound_enclosure_of(ge, {"x": 0.0}, {"x": 1.0}, 1.0, k)
        ps, hs = sound_enclosure_of(gs, {"x": 0.0}, {"x": 1.0}, 1.0, k)
        padd = dpoly_add(pe, ps)
        pmul = dpoly_mul(pe, ps)
        sample_containment(padd, lambda e: math.exp(e) + 1 / (1 + math.exp(-2 * e)))
        sample_containment(pmul, lambda e: math.exp(e) / (1 + math.exp(-2 * e)))


def test_dpoly_mul_exp_product_contains_exp2eta():
    x = var("x", ())
    g = ExprGraph(expr.exp(x))
    p, _ = sound_enclosure_of(g, {"x": 0.0}, {"x": 1.0}, 1.0, 2)
    sq = dpoly_mul(p, p)
    sample_containment(sq, lambda e: math.exp(2 * e), n=1000)


def test_dpoly_mul_unbounded_trust_raises():
    p = DirectionalPoly(2, (1.0, 1.0), Interval(0.5, 1.0), Interval(0, math.inf))
    with pytest.raises(UnboundedTrust):
        dpoly_mul(p, p)


def test_compose_exp_on_eta():
    eta = exact_poly([0.0, 1.0], 1.0)
    c = dpoly_compose_elementary("exp", eta)
    assert c.coeffs[0] == pytest.approx(1.0, abs=1e-15)
    assert c.coeffs[1] == pytest.approx(1.0, abs=1e-15)
    assert c.remainder.hi == pytest.approx(math.e - 2.0, rel=1e-12)
    sample_containment(c, math.exp)


def test_compose_log_constant():
    p = exact_poly([3.0], 1.0)
    c = dpoly_compose_elementary("log", p)
    assert c.coeffs[0] == pytest.approx(math.log(3.0), rel=1e-14)
    assert abs(c.coeffs[1]) < 1e-14
    assert c.remainder.width <= 1e-12


def test_compose_sampling_oracle_random_inner():
    rng = np.random.default_rng(7)
    for _ in range(10):
        a, b = rng.normal(scale=0.5, size=2)
        inner = exact_poly([a, b], 1.0, k=3)
        c = dpoly_compose_elementary("softplus", inner)
        sp = lambda e: math.log1p(math.exp(a + b * e))
        sample_containment(c, sp)


def test_range_bound_examples():
    const = exact_poly([2.5], 1.0)
    r = range_bound(const, Interval(0, 1.0))
    assert r.lo <= 2.5 <= r.hi and r.width < 1e-12
    eta = exact_poly([0.0, 1.0], 1.0)
    r = range_bound(eta, Interval(0, 1.0))
    assert r.lo <= 0.0 and r.hi >= 1.0
    p = DirectionalPoly(2, (0.3, -1.2), Interval(-0.5, 0.7), Interval(0, 2.0))
    r = range_bound(p, Interval(0, 2.0))
    rng = np.random.default_rng(1)
    for eta_v in rng.uniform(0, 2.0, size=1000):
        for rv in (p.remainder.lo, p.remainder.hi):
            val = 0.3 - 1.2 * eta_v + rv * eta_v**2
            assert r.lo - 1e-12 <= val <= r.hi + 1e-12


# -- full propagation ---------------------------------------------------------


def test_propagate_lsq_exact_quadratic():
    g = ExprGraph((var("x", ()) - 1.5) ** 2)
    h = line_restrict(g, {"x": 0.0}, {"x": 1.0})
    for etabar in (1.0, 10.0, math.inf):
        p = propagate_directional(h, etabar, 2)
        assert p.coeffs[0] == pytest.approx(2.25, abs=1e-14)
        assert p.coeffs[1] == pytest.approx(-3.0, abs=1e-14)
        assert p.remainder.lo == pytest.approx(1.0, rel=1e-12)
        assert p.remainder.hi == pytest.approx(1.0, rel=1e-12)


def test_propagate_fig2_function_sandwiches():
    x = var("x", ())
    g = ExprGraph(constant(1.5) * expr.exp(constant(3.0) * x) - constant(25.0) * x**2)
    for v in (1.0, -1.0):
        h = line_restrict(g, {"x": 0.5}, {"x": v})
        p = propagate_directional(h, 0.5, 2)
        sample_containment(p, lambda e: evaluate(h, {"eta": e}), n=800)


def test_propagate_logistic_unbounded_trust():
    x = var("x", ())
    g = ExprGraph(constant(2.0 / 3.0) * expr.softplus(x) + constant(1.0 / 3.0) * expr.softplus(-x))
    h = line_restrict(g, {"x": 0.0}, {"x": 1.0})
    p = propagate_directional(h, math.inf, 2)
    assert p.remainder.hi <= 0.125 + 1e-12
    assert p.remainder.lo >= -0.125 - 1e-12
    assert p.coeffs[0] == pytest.approx(math.log(2.0), rel=1e-12)


def test_propagate_quartic_needs_finite_trust():
    g = ExprGraph((var("x", ()) - 3.0) ** 4)
    h = line_restrict(g, {"x": 0.0}, {"x": 1.0})
    with pytest.raises(UnboundedTrust):
        propagate_directional(h, math.inf, 2)
    p = propagate_directional(h, 1.0, 2)
    sample_containment(p, lambda e: (e - 3.0) ** 4)


def test_upper_poly_fields():
    p = DirectionalPoly(2, (1.0, 2.0), Interval(-2.0, 5.0), Interval(0, 1.0))
    up = upper_poly(p)
    assert up[-1] == 5.0
    assert polyval(up, 0.0) == p.coeffs[0]
    lo = lower_poly(p)
    assert lo[-1] == -2.0


def test_exactness_on_polynomials():
    # cubic loss, degree-4 enclosure: zero-width remainder up to ulps
    x = var("x", ())
    g = ExprGraph(x**3 - constant(2.0) * x**2 + x)
    h = line_restrict(g, {"x": 0.2}, {"x": 0.7})
    p = propagate_directional(h, 2.0, 4)
    assert p.remainder.width <= 1e-12


def small_mlp(rng, depth=1, n=8, din=5, h=4, c=3):
    from automm.problems import Dataset, mlp_problem

    feats = rng.uniform(0, 1, size=(n, din))
    labels = rng.integers(0, c, size=n).astype(np.float64)
    ds = Dataset(feats, labels)
    return mlp_problem(depth, h, ds, seed=int(rng.integers(1 << 31)), n_classes=c)


def test_degree_monotone_gap_on_mlp():
    # deep-MLP tightness setup: descent direction from the initial point,
    # trust region in the regime where the bounds are informative
    from automm.problems import mlp_problem, synthetic_fallback

    ds = synthetic_fallback(60, seed=0)
    prob = mlp_problem(3, 32, ds, seed=1)
    g = expr.gradient_all(prob.graph, prob.init)
    v = {k: -gv for k, gv in g.items()}
    h = line_restrict(prob.graph, prob.init, v)
    trust = 0.1
    etas = np.linspace(0, trust, 120)
    hv = np.array([evaluate(h, {"eta": e}) for e in etas])
    gaps = []
    for k in (2, 3, 4):
        p = propagate_directional(h, trust, k)
        up = polyval(upper_poly(p), etas)
        assert np.all(up >= hv - 1e-9 * (1 + np.abs(hv)))
        gaps.append(float(np.max(up - hv)))
    assert gaps[0] >= gaps[1] >= gaps[2]


def test_propagate_quadratic_d1_matches_directional():
    rng = np.random.default_rng(11)
    prob = small_mlp(rng, depth=1)
    g = expr.gradient_all(prob.graph, prob.init)
    v = {k: -gv for k, gv in g.items()}
    hd = line_restrict(prob.graph, prob.init, v)
    pd = propagate_directional(hd, 0.5, 2, "sharp")
    U = {k: vv[None] for k, vv in v.items()}
    hq = subspace_restrict(prob.graph, prob.init, U, 1)
    q = propagate_quadratic(hq, np.array([0.5]), "sharp")
    assert q.c0 == pytest.approx(pd.coeffs[0], rel=1e-12)
    assert q.c1[0] == pytest.approx(pd.coeffs[1], rel=1e-12)
    assert q.quad.lo[0, 0] == pytest.approx(pd.remainder.lo, rel=1e-9, abs=1e-12)
    assert q.quad.hi[0, 0] == pytest.approx(pd.remainder.hi, rel=1e-9, abs=1e-12)


def test_propagate_quadratic_exact_for_quadratics():
    rng = np.random.default_rng(2)
    d = 4
    xstar = rng.normal(size=d)
    x = var("x", (d,))
    z = x - constant(xstar)
    g = ExprGraph(expr.sum_reduce(z * z))
    x0 = rng.normal(size=d)
    U = {"x": np.eye(d)}
    h = subspace_restrict(g, {"x": x0}, U, d)
    q = propagate_quadratic(h, np.ones(d), "sharp")
    assert np.allclose(q.quad.lo, np.eye(d), atol=1e-10)
    assert np.allclose(q.quad.hi, np.eye(d), atol=1e-10)
    assert np.allclose(q.c1, 2.0 * (x0 - xstar), atol=1e-10)
    assert q.c0 == pytest.approx(float(np.sum((x0 - xstar) ** 2)), rel=1e-12)


def test_propagate_quadratic_mlp_sampling_soundness():
    rng = np.random.default_rng(21)
    prob = small_mlp(rng, depth=1)
    g = expr.gradient_all(prob.graph, prob.init)
    names = list(prob.init)
    d = 2
    U = {k: np.zeros((d,) + np.shape(prob.init[k])) for k in prob.init}
    # two directions: gradient split over first/second half of tensors
    for k in names[: len(names) // 2]:
        U[k][0] = -g[k]
    for k in names[len(names) // 2 :]:
        U[k][1] = -g[k]
    h = subspace_restrict(prob.graph, prob.init, U, d)
    T = np.array([0.5, 0.5])
    q = propagate_quadratic(h, T, "sharp")
    for _ in range(300):
        eta = rng.uniform(0, T)
        val = evaluate(h, {"eta": eta})
        s = 1e-9 * (1 + abs(val))
        assert q.lower_value(eta) - s <= val <= q.upper_value(eta) + s


def test_propagation_master_soundness_small():
    """Cross-problem sampling soundness (a reduced version of the
    acceptance criterion, which runs the full matrix)."""
    from automm.problems import one_d_problem, random_regression

    rng = np.random.default_rng(9)
    graphs = []
    for name in ("lsq", "quartic", "logistic1d", "nnparam"):
        graphs.append(one_d_problem(name))
    spec, _ = random_regression("lsq", 30, 4, seed=1)
    graphs.append(spec)
    spec, _ = random_regression("logistic", 30, 4, seed=2)
    graphs.append(spec)
    spec, _ = random_regression("gen_normal", 30, 4, seed=3)
    graphs.append(spec)
    graphs.append(small_mlp(rng, depth=2))
    for prob in graphs:
        x0 = {k: np.asarray(v) + 0.1 * rng.normal(size=np.shape(v)) for k, v in prob.init.items()}
        v = {k: rng.normal(size=np.shape(val)) for k, val in x0.items()}
        h = line_restrict(prob.graph, x0, v)
        for etabar in (0.1, 1.0):
            for k in (2, 3):
                for method in ("sharp", "lagrange"):
                    p = propagate_directional(h, etabar, k, method)
                    assert p.coeffs[0] == pytest.approx(evaluate(h, {"eta": 0.0}), rel=1e-10, abs=1e-12)
                    sample_containment(p, lambda e: evaluate(h, {"eta": e}), n=120)
