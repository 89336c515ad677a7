"""Numerically stable evaluations of the elementary function set.

The closed set is {exp, log, softplus, sigmoid}; integer powers are
handled structurally by the graph engine.  softplus and sigmoid use the
standard overflow-free forms so that float64 propagation stays exact
into the saturated tails.
"""

import numpy as np

ELEMENTARY = ("exp", "log", "softplus", "sigmoid")


def softplus(x):
    x = np.asarray(x, dtype=np.float64)
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def apply_fn(fn, x):
    if fn == "exp":
        return np.exp(x)
    if fn == "log":
        return np.log(x)
    if fn == "softplus":
        return softplus(x)
    if fn == "sigmoid":
        return sigmoid(x)
    raise ValueError(f"unknown elementary function {fn!r}")


def apply_fn_deriv(fn, x):
    """First derivative, used by reverse-mode accumulation."""
    if fn == "exp":
        return np.exp(x)
    if fn == "log":
        return 1.0 / x
    if fn == "softplus":
        return sigmoid(x)
    if fn == "sigmoid":
        s = sigmoid(x)
        return s * (1.0 - s)
    raise ValueError(f"unknown elementary function {fn!r}")
