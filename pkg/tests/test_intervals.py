import math

import numpy as np
import pytest

from automm.errors import DomainError, ShapeError
from automm.intervals import (
    Interval,
    TensorInterval,
    iv_add,
    iv_monotone_image,
    iv_mul,
    iv_pow,
    iv_scale,
    outer_power,
    ti_inner,
)

ULP = np.finfo(np.float64).eps


def approx_interval(result, lo, hi, ulps=4):
    """Result must contain [lo, hi] and not exceed it by more than a few ulps."""
    slack_lo = ulps * ULP * max(1.0, abs(lo)) if math.isfinite(lo) else 0.0
    slack_hi = ulps * ULP * max(1.0, abs(hi)) if math.isfinite(hi) else 0.0
    assert result.lo <= lo and result.hi >= hi, f"{result} does not contain [{lo}, {hi}]"
    if math.isfinite(lo):
        assert result.lo >= lo - slack_lo, f"{result}.lo too far below {lo}"
    else:
        assert result.lo == lo
    if math.isfinite(hi):
        assert result.hi <= hi + slack_hi, f"{result}.hi too far above {hi}"
    else:
        assert result.hi == hi


def test_constructor_validation():
    with pytest.raises(ValueError):
        Interval(2.0, 1.0)
    with pytest.raises(ValueError):
        Interval(np.nan, 1.0)
    i = Interval(-np.inf, np.inf)
    assert not i.is_bounded()


def test_add_examples():
    approx_interval(iv_add(Interval(1, 2), Interval(-1, 3)), 0.0, 5.0)
    # additive identity holds exactly
    b = Interval(-2.5, 7.0)
    assert iv_add(Interval(0, 0), b) == b
    assert iv_add(b, Interval(0, 0)) == b
    approx_interval(iv_add(Interval(-np.inf, 0), Interval(1, 1)), -np.inf, 1.0)


def test_mul_examples():
    approx_interval(iv_mul(Interval(1, 2), Interval(-1, 3)), -2.0, 6.0)
    assert iv_mul(Interval(0, 0), Interval(-np.inf, np.inf)) == Interval(0, 0)
    approx_interval(iv_mul(Interval(-2, -1), Interval(-3, -2)), 2.0, 6.0)
    # degenerate one is an exact identity
    b = Interval(-1.25, 0.5)
    assert iv_mul(Interval(1, 1), b) == b


def test_scale_examples():
    approx_interval(iv_scale(Interval(1, 3), -2.0), -6.0, -2.0)
    assert iv_scale(Interval(-4.0, 9.0), 0.0) == Interval(0, 0)
    approx_interval(iv_scale(Interval(-1, 2), 3.0), -3.0, 6.0)


def test_scale_equals_mul_by_degenerate():
    rng = np.random.default_rng(0)
    for _ in range(200):
        lo, hi = np.sort(rng.normal(scale=5.0, size=2))
        z = float(rng.normal(scale=3.0))
        i = Interval(lo, hi)
        assert iv_scale(i, z) == iv_mul(i, Interval(z, z))


def test_monotone_images():
    approx_interval(iv_monotone_image(Interval(0, 1), "exp"), 1.0, math.e)
    sq = iv_monotone_image(Interval(-1, 2), "pow", exponent=2)
    assert sq.lo == 0.0
    approx_interval(sq, 0.0, 4.0)
    with pytest.raises(DomainError):
        iv_monotone_image(Interval(-1, 1), "log")
    approx_interval(iv_monotone_image(Interval(0, 0), "softplus"), math.log(2), math.log(2))
    sig = iv_monotone_image(Interval(-1000.0, 1000.0), "sigmoid")
    assert 0.0 <= sig.lo and sig.hi <= 1.0


def test_integer_power_straddle_odd():
    approx_interval(iv_pow(Interval(-2, 1), 3), -8.0, 1.0)
    assert iv_pow(Interval(-5, 7), 0) == Interval(1, 1)


def test_containment_soundness_random():
    rng = np.random.default_rng(42)
    ops = {
        "add": (iv_add, lambda x, y: x + y),
        "mul": (iv_mul, lambda x, y: x * y),
    }
    for _ in range(2500):
        a_lo, a_hi = np.sort(rng.normal(scale=4.0, size=2))
        b_lo, b_hi = np.sort(rng.normal(scale=4.0, size=2))
        a, b = Interval(a_lo, a_hi), Interval(b_lo, b_hi)
        x = rng.uniform(a_lo, a_hi)
        y = rng.uniform(b_lo, b_hi)
        for name, (op, ref) in ops.items():
            r = op(a, b)
            v = ref(x, y)
            assert r.lo <= v <= r.hi, f"{name}: {v} not in {r}"


def test_degenerate_commutes_with_reals():
    rng = np.random.default_rng(7)
    for _ in range(500):
        x = float(rng.normal(scale=10.0))
        y = float(rng.normal(scale=10.0))
        for op, ref in ((iv_add, x + y), (iv_mul, x * y)):
            r = op(Interval(x, x), Interval(y, y))
            assert r.lo <= ref <= r.hi
            assert r.width <= 4 * ULP * max(1.0, abs(ref))


def test_tensor_interval_validation():
    with pytest.raises(ShapeError):
        TensorInterval(np.zeros((2, 3)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        TensorInterval(np.ones(3), np.zeros(3))
    with pytest.raises(ShapeError):
        TensorInterval(np.zeros((1, 1, 1, 1, 1)), np.ones((1, 1, 1, 1, 1)))


def test_ti_inner_examples():
    # all-[1,2] matrix interval against the ones vector
    a = TensorInterval(np.ones((3, 2)), 2 * np.ones((3, 2)))
    out = ti_inner(a, np.ones(2))
    assert out.shape == (3,)
    assert np.all(out.lo <= 2.0) and np.all(out.hi >= 4.0)
    assert np.all(out.lo >= 2.0 - 1e-12) and np.all(out.hi <= 4.0 + 1e-12)

    # degenerate interval reduces to the ordinary inner product
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 3, 2))
    b = rng.normal(size=(3, 2))
    expected = np.tensordot(m, b, axes=2)
    out = ti_inner(TensorInterval.point(m), b)
    assert np.allclose(out.lo, expected, rtol=1e-12, atol=1e-12)
    assert np.allclose(out.hi, expected, rtol=1e-12, atol=1e-12)


def test_ti_inner_rank2_rank2_enumeration_oracle():
    # scalar result: compare against endpoint enumeration over all 2^4 corners
    rng = np.random.default_rng(11)
    lo = rng.normal(size=(2, 2))
    hi = lo + rng.uniform(0, 2, size=(2, 2))
    b = rng.normal(size=(2, 2))
    out = ti_inner(TensorInterval(lo, hi), b)
    corners = []
    for mask in range(16):
        pick = np.array([(mask >> k) & 1 for k in range(4)]).reshape(2, 2)
        x = np.where(pick, hi, lo)
        corners.append(np.sum(x * b))
    assert out.lo <= min(corners) + 1e-12
    assert out.hi >= max(corners) - 1e-12
    assert out.lo >= min(corners) - 1e-9
    assert out.hi <= max(corners) + 1e-9


def test_ti_inner_shape_mismatch():
    a = TensorInterval(np.zeros((2, 3)), np.ones((2, 3)))
    with pytest.raises(ShapeError):
        ti_inner(a, np.ones(2))


def test_outer_power():
    v = np.array([1.0, 2.0])
    assert np.array_equal(outer_power(v, 2), np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert outer_power(v, 0) == 1.0
    assert outer_power(np.array([3.0]), 3).reshape(()) == 27.0


def test_ti_inner_containment_random():
    rng = np.random.default_rng(19)
    for _ in range(200):
        lo = rng.normal(size=(3, 4))
        hi = lo + rng.uniform(0, 1, size=(3, 4))
        b = rng.normal(size=4)
        ti = TensorInterval(lo, hi)
        out = ti_inner(ti, b)
        sample = rng.uniform(lo, hi)
        val = sample @ b
        assert np.all(out.lo <= val + 1e-12) and np.all(val <= out.hi + 1e-12)
