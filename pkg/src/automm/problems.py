"""Experiment problem zoo.

Four one-dimensional reference losses, seeded random regression
generators (least squares, logistic, quartic-error), desk-scale
multi-layer perceptrons with softplus activations and squared error,
and MNIST IDX ingestion with a seeded synthetic fallback of identical
shapes.  Every generator is a pure function of its parameters and seed.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import expr
from .errors import BadMagic, TruncatedFile, UnknownProblem

__all__ = [
    "ProblemSpec",
    "Dataset",
    "one_d_problem",
    "random_regression",
    "mlp_problem",
    "load_mnist",
    "synthetic_fallback",
]

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


@dataclass
class ProblemSpec:
    name: str
    graph: expr.ExprGraph
    init: dict
    optimum: tuple | None = None  # (argmin bindings or scalar, min value)
    metadata: dict = field(default_factory=dict)


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.labels))):
            raise ValueError("dataset entries must be finite")
        if self.features.shape[0] == 0 or self.features.ndim != 2:
            raise ValueError("features must be a nonempty n x d matrix")


def one_d_problem(name: str) -> ProblemSpec:
    """Reference one-dimensional losses, each starting at x = 0."""
    x = expr.var("x", ())
    if name == "lsq":
        graph = expr.ExprGraph((x - 1.5) ** 2)
        optimum = (1.5, 0.0)
    elif name == "quartic":
        graph = expr.ExprGraph((x - 3.0) ** 4)
        optimum = (3.0, 0.0)
    elif name == "logistic1d":
        graph = expr.ExprGraph(
            expr.constant(2.0 / 3.0) * expr.softplus(x) + expr.constant(1.0 / 3.0) * expr.softplus(-x)
        )
        # d/dx = (2/3) sigmoid(x) - (1/3) sigmoid(-x) = 0 at x = -log 2
        xstar = -np.log(2.0)
        optimum = (float(xstar), float(2.0 / 3.0 * np.log1p(np.exp(xstar)) + 1.0 / 3.0 * np.log1p(np.exp(-xstar))))
    elif name == "nnparam":
        graph = expr.ExprGraph((expr.sigmoid(x - 10.0) - 0.5) ** 2)
        optimum = (10.0, 0.0)
    else:
        raise UnknownProblem(f"no one-dimensional problem named {name!r}")
    return ProblemSpec(name, graph, {"x": np.float64(0.0)}, optimum, {"n": 1, "d": 1})


def _gen_normal_noise(rng, n, alpha=0.1, beta=4.0):
    """Generalized symmetric normal noise via the gamma representation:
    |eps| ~ alpha * Gamma(1/beta, 1)^(1/beta) with a random sign."""
    mag = alpha * rng.gamma(1.0 / beta, 1.0, size=n) ** (1.0 / beta)
    sign = rng.choice([-1.0, 1.0], size=n)
    return mag * sign


def random_regression(kind: str, n: int, d: int, seed: int):
    """Seeded regression instance: features ~ N(0, Z'Z), labels from a
    known model; the loss graph is the negative log-likelihood."""
    if kind not in ("lsq", "logistic", "gen_normal"):
        raise UnknownProblem(f"no regression kind {kind!r}")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((d, d))
    A = rng.standard_normal((n, d)) @ Z  # feature rows ~ N(0, Z'Z)
    beta_star = rng.standard_normal(d)
    mean = A @ beta_star
    meta = {"n": n, "d": d, "seed": seed, "beta_star": beta_star}
    x = expr.var("x", (d,))
    if kind == "lsq":
        b = mean + 0.1 * rng.standard_normal(n)
        graph = expr.ExprGraph(expr.sum_reduce((expr.constant(A) @ x - expr.constant(b)) ** 2))
        xstar, *_ = np.linalg.lstsq(A, b, rcond=None)
        opt_val = float(np.sum((A @ xstar - b) ** 2))
        optimum = ({"x": xstar}, opt_val)
    elif kind == "logistic":
        p = 1.0 / (1.0 + np.exp(-mean))
        b = (rng.uniform(size=n) < p).astype(np.float64)
        z = expr.constant(A) @ x
        graph = expr.ExprGraph(expr.sum_reduce(expr.softplus(z) - expr.constant(b) * z))
        optimum = None
        sep = bool(np.all(b == 1.0) or np.all(b == 0.0))
        meta["unbounded"] = sep  # fully one-sided labels can push the optimum to infinity
    else:  # gen_normal
        b = mean + _gen_normal_noise(rng, n)
        graph = expr.ExprGraph(expr.sum_reduce((expr.constant(A) @ x - expr.constant(b)) ** 4))
        optimum = None
    dataset = Dataset(A, b)
    return ProblemSpec(f"{kind}_reg_n{n}_d{d}_s{seed}", graph, {"x": np.zeros(d)}, optimum, meta), dataset


def mlp_problem(hidden_layers: int, width: int, dataset: Dataset, seed: int, n_classes=None) -> ProblemSpec:
    """Fully connected softplus network with mean squared error against
    one-hot labels (no softmax); weights ~ N(0, 1/fan_in), zero biases."""
    if hidden_layers < 1 or width < 1:
        raise ValueError("need hidden_layers >= 1 and width >= 1")
    rng = np.random.default_rng(seed)
    X = dataset.features
    n, din = X.shape
    if dataset.labels.ndim == 1:
        c = int(dataset.labels.max()) + 1 if n_classes is None else n_classes
        Y = np.eye(c)[dataset.labels.astype(int)]
    else:
        Y = dataset.labels
        c = Y.shape[1]
    ones = expr.constant(np.ones((n, 1)))
    widths = [din] + [width] * hidden_layers + [c]
    init = {}
    a = expr.constant(X)
    for layer in range(len(widths) - 1):
        wname, bname = f"W{layer}", f"b{layer}"
        init[wname] = rng.standard_normal((widths[layer], widths[layer + 1])) / np.sqrt(widths[layer])
        init[bname] = np.zeros((1, widths[layer + 1]))
        z = a @ expr.var(wname, init[wname].shape) + ones @ expr.var(bname, init[bname].shape)
        a = expr.softplus(z) if layer < len(widths) - 2 else z
    loss = expr.constant(1.0 / (n * c)) * expr.sum_reduce((a - expr.constant(Y)) ** 2)
    name = f"mlp_h{hidden_layers}_w{width}_n{n}_s{seed}"
    meta = {"n": n, "d": sum(init[k].size for k in init), "seed": seed, "layers": hidden_layers, "width": width}
    return ProblemSpec(name, expr.ExprGraph(loss), init, None, meta)


def _read_idx(path, expected_magic):
    data = Path(path).read_bytes()
    if len(data) < 4:
        raise TruncatedFile(f"{path}: missing magic")
    (magic,) = struct.unpack(">i", data[:4])
    if magic != expected_magic:
        raise BadMagic(f"{path}: magic {magic:#010x}, expected {expected_magic:#010x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise TruncatedFile(f"{path}: truncated dimension header")
    dims = struct.unpack(f">{ndim}i", data[4:header])
    count = int(np.prod(dims))
    if len(data) < header + count:
        raise TruncatedFile(f"{path}: payload holds {len(data) - header} of {count} bytes")
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=header).reshape(dims)


def load_mnist(directory, n=1000) -> Dataset:
    """First n images/labels from IDX files in `directory`, flattened to
    784 features in [0, 1] with integer labels."""
    directory = Path(directory)
    images = labels = None
    for stem in ("train-images-idx3-ubyte", "train-images.idx3-ubyte"):
        p = directory / stem
        if p.exists():
            images = _read_idx(p, IMAGES_MAGIC)
            break
    for stem in ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"):
        p = directory / stem
        if p.exists():
            labels = _read_idx(p, LABELS_MAGIC)
            break
    if images is None or labels is None:
        raise FileNotFoundError(f"no MNIST IDX files under {directory}")
    n = min(n, images.shape[0])
    feats = images[:n].reshape(n, -1).astype(np.float64) / 255.0
    return Dataset(feats, labels[:n].astype(np.float64))


def synthetic_fallback(n: int, seed: int, d=784, n_classes=10) -> Dataset:
    """Seeded Gaussian-blob class data with MNIST-compatible shapes."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, n_classes, size=n)
    centers = rng.uniform(0.2, 0.8, size=(n_classes, d))
    feats = np.clip(centers[labels] + 0.1 * rng.standard_normal((n, d)), 0.0, 1.0)
    return Dataset(feats, labels.astype(np.float64))
