"""Forward propagation of enclosures through a restricted loss graph.

Walks the DAG in topological order; leaves become exact polynomials
(constants, or the step variable eta itself) and interior nodes apply
the truncated interval-polynomial operations.  The result is a sound
degree-k enclosure of h(eta) = f(x + eta v) over the trust region,
tight at eta = 0.
"""

import numpy as np

from ..errors import ShapeError, UnboundedTrust
from ..expr import ExprGraph
from ..intervals import Interval
from .dpoly import DirectionalPoly, TaylorPoly, Trust, tp_add, tp_compose, tp_matmul, tp_mul, tp_power, tp_sum

__all__ = ["propagate_directional", "PROPAGATE_CALLS"]

# instrumentation: bumped once per propagation sweep (read by tests)
PROPAGATE_CALLS = 0


def propagate_directional(g: ExprGraph, etabar: float, k: int, method: str = "sharp") -> DirectionalPoly:
    """Degree-k enclosure of a single-scalar-variable graph on [0, etabar].

    etabar may be infinite only when no truncation or range bound over
    the trust region is ever required (losses with a globally valid
    quadratic majorizer); otherwise UnboundedTrust is raised.
    """
    global PROPAGATE_CALLS
    PROPAGATE_CALLS += 1
    if set(g.variables) != {"eta"} or g.variables["eta"] != ():
        raise ShapeError("directional propagation needs a single scalar variable eta")
    trust = Trust(k, float(etabar), method)
    vals = {}
    for node in g.topo:
        kind = node.kind
        if kind == "const":
            out = TaylorPoly.constant(trust, node.payload)
        elif kind == "var":
            out = TaylorPoly.eta(trust)
        elif kind == "add":
            out = tp_add(vals[id(node.children[0])], vals[id(node.children[1])])
        elif kind == "sub":
            out = tp_add(vals[id(node.children[0])], vals[id(node.children[1])], sub=True)
        elif kind == "mul":
            out = tp_mul(vals[id(node.children[0])], vals[id(node.children[1])])
        elif kind == "matmul":
            out = tp_matmul(vals[id(node.children[0])], vals[id(node.children[1])])
        elif kind == "sum":
            out = tp_sum(vals[id(node.children[0])])
        elif kind == "unary":
            out = tp_compose(node.payload, vals[id(node.children[0])])
        elif kind == "intpow":
            out = tp_power(vals[id(node.children[0])], node.payload)
        elif kind == "affine":
            raise ShapeError("affine leaves belong to subspace graphs; use the quadratic propagator")
        else:
            raise AssertionError(f"unknown node kind {kind}")
        vals[id(node)] = out
    result = vals[id(g.output)]
    rem_lo = float(np.asarray(result.rem_lo).reshape(()))
    rem_hi = float(np.asarray(result.rem_hi).reshape(()))
    if not trust.bounded and not (np.isfinite(rem_lo) and np.isfinite(rem_hi)):
        raise UnboundedTrust("enclosure is unbounded over an infinite trust region")
    return DirectionalPoly(
        k,
        tuple(float(np.asarray(c).reshape(())) for c in result.coeffs),
        Interval(rem_lo, rem_hi),
        Interval(0.0, float(etabar)),
        method,
    )
