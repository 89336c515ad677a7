import struct

import numpy as np
import pytest

from automm import expr
from automm.errors import BadMagic, TruncatedFile, UnknownProblem
from automm.problems import (
    Dataset,
    load_mnist,
    mlp_problem,
    one_d_problem,
    random_regression,
    synthetic_fallback,
)


def fd_gradient_check(graph, bindings, rtol=1e-5):
    grads = expr.gradient_all(graph, bindings)
    h = 1e-5
    base = {k: np.array(v, dtype=np.float64) for k, v in bindings.items()}
    for name, w in base.items():
        flat = w.reshape(-1)
        idx = np.linspace(0, flat.size - 1, min(flat.size, 5)).astype(int)
        for i in idx:
            old = flat[i]
            flat[i] = old + h
            fp = expr.evaluate(graph, base)
            flat[i] = old - h
            fm = expr.evaluate(graph, base)
            flat[i] = old
            fd = (fp - fm) / (2 * h)
            got = grads[name].reshape(-1)[i]
            assert got == pytest.approx(fd, rel=rtol, abs=1e-7), name


def test_one_d_catalog():
    lsq = one_d_problem("lsq")
    assert lsq.optimum == (1.5, 0.0)
    assert expr.evaluate(lsq.graph, {"x": 1.5}) == 0.0
    quartic = one_d_problem("quartic")
    assert quartic.optimum == (3.0, 0.0)
    nn = one_d_problem("nnparam")
    loss0 = expr.evaluate(nn.graph, nn.init)
    assert loss0 == pytest.approx(0.2499546, abs=1e-6)
    g0 = float(expr.gradient(nn.graph, nn.init, "x"))
    assert abs(g0) < 1e-4  # tiny initial gradient
    with pytest.raises(UnknownProblem):
        one_d_problem("nope")


def test_one_d_gradients_fd():
    for name in ("lsq", "quartic", "logistic1d", "nnparam"):
        p = one_d_problem(name)
        fd_gradient_check(p.graph, {"x": np.float64(0.37)})


def test_lsq_regression_certified_optimum():
    spec, ds = random_regression("lsq", 60, 6, seed=0)
    xstar, fstar = spec.optimum
    rng = np.random.default_rng(1)
    for _ in range(200):
        x = xstar["x"] + rng.normal(scale=0.1, size=6)
        assert expr.evaluate(spec.graph, {"x": x}) >= fstar - 1e-9


def test_logistic_separable_flagged_unbounded():
    # single constant positive feature, all labels 1: optimum at +inf
    n = 16
    A = np.ones((n, 1))
    b = np.ones(n)
    x = expr.var("x", (1,))
    z = expr.constant(A) @ x
    graph = expr.ExprGraph(expr.sum_reduce(expr.softplus(z) - expr.constant(b) * z))
    v1 = expr.evaluate(graph, {"x": np.array([5.0])})
    v2 = expr.evaluate(graph, {"x": np.array([50.0])})
    assert v2 < v1  # loss keeps decreasing toward infinity
    # the generator flags fully one-sided label draws
    spec, _ = random_regression("logistic", 5, 2, seed=0)
    assert "unbounded" in spec.metadata


def test_gen_normal_loss_at_truth_is_small():
    spec, ds = random_regression("gen_normal", 100, 5, seed=2)
    beta_star = spec.metadata["beta_star"]
    val = expr.evaluate(spec.graph, {"x": beta_star})
    # sum of eps^4 with eps ~ 0.1-scale noise
    assert 0.0 < val < 0.1 * 100


def test_regression_deterministic():
    s1, d1 = random_regression("lsq", 30, 4, seed=9)
    s2, d2 = random_regression("lsq", 30, 4, seed=9)
    assert np.array_equal(d1.features, d2.features)
    assert np.array_equal(d1.labels, d2.labels)
    assert expr.evaluate(s1.graph, s1.init) == expr.evaluate(s2.graph, s2.init)


def test_regression_gradients_fd():
    for kind in ("lsq", "logistic", "gen_normal"):
        spec, _ = random_regression(kind, 25, 3, seed=4)
        rng = np.random.default_rng(0)
        fd_gradient_check(spec.graph, {"x": rng.normal(scale=0.2, size=3)})


def test_mlp_zero_weight_bias_forward():
    # zero all weights: prediction is 0, loss = mean of squared one-hot
    ds = synthetic_fallback(7, seed=0, d=6, n_classes=3)
    prob = mlp_problem(1, 4, ds, seed=0)
    zeros = {k: np.zeros_like(v) for k, v in prob.init.items()}
    # softplus(0) = log 2 flows through the last affine with zero weights
    val = expr.evaluate(prob.graph, zeros)
    Y = np.eye(3)[ds.labels.astype(int)]
    assert val == pytest.approx(float(np.mean(Y**2)) * 3 / 3, rel=1e-12)


def test_mlp_gradient_fd():
    ds = synthetic_fallback(6, seed=1, d=5, n_classes=2)
    prob = mlp_problem(2, 3, ds, seed=2)
    fd_gradient_check(prob.graph, prob.init)


def test_mlp_wide_single_example_constructible():
    ds = synthetic_fallback(1, seed=0)
    prob = mlp_problem(1, 4096, ds, seed=0)
    assert prob.init["W0"].shape == (784, 4096)
    assert np.isfinite(expr.evaluate(prob.graph, prob.init))


def write_idx(path, magic, dims, payload):
    with open(path, "wb") as f:
        f.write(struct.pack(">i", magic))
        for d in dims:
            f.write(struct.pack(">i", d))
        f.write(payload)


def test_idx_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(5, 28, 28), dtype=np.uint8)
    labels = rng.integers(0, 10, size=5, dtype=np.uint8)
    write_idx(tmp_path / "train-images-idx3-ubyte", 0x803, images.shape, images.tobytes())
    write_idx(tmp_path / "train-labels-idx1-ubyte", 0x801, labels.shape, labels.tobytes())
    ds = load_mnist(tmp_path, n=5)
    assert ds.features.shape == (5, 784)
    assert ds.features.max() <= 1.0
    px = images[0].reshape(-1)
    assert ds.features[0][px == 255] == pytest.approx(1.0) if (px == 255).any() else True
    assert np.array_equal(ds.labels, labels.astype(np.float64))


def test_idx_bad_magic(tmp_path):
    write_idx(tmp_path / "train-images-idx3-ubyte", 0x804, (1, 2, 2), b"\0" * 4)
    write_idx(tmp_path / "train-labels-idx1-ubyte", 0x801, (1,), b"\0")
    with pytest.raises(BadMagic):
        load_mnist(tmp_path)


def test_idx_truncated(tmp_path):
    write_idx(tmp_path / "train-images-idx3-ubyte", 0x803, (2, 28, 28), b"\0" * 100)
    write_idx(tmp_path / "train-labels-idx1-ubyte", 0x801, (2,), b"\0\0")
    with pytest.raises(TruncatedFile):
        load_mnist(tmp_path)


def test_idx_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_mnist(tmp_path)


def test_synthetic_fallback_reproducible():
    a = synthetic_fallback(10, seed=5)
    b = synthetic_fallback(10, seed=5)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)
    assert a.features.shape == (10, 784)
    c = synthetic_fallback(10, seed=6)
    assert not np.array_equal(a.features, c.features)
