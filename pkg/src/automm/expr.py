"""Minimal computation-graph engine for scalar losses.

Graphs are DAGs of dense-tensor operations {constant, variable, add,
sub, elementwise mul, matmul, sum-reduce, unary in {exp, log, softplus,
sigmoid}, integer power} with scalar-tensor broadcasting only.  Graphs
are immutable after construction; evaluation and reverse-mode gradients
use per-call scratch storage, so concurrent use is safe.

Restriction helpers rebuild a loss f as a function of a step size:
``line_restrict`` substitutes w -> x0_w + eta * v_w (scalar eta) and
``subspace_restrict`` substitutes w -> x0_w + sum_i eta_i * U_w[i]
(vector eta), the latter via a dedicated affine leaf node.
"""

import numpy as np

from . import funcs
from .errors import DomainError, ShapeError, UnboundVariable

__all__ = [
    "Node",
    "ExprGraph",
    "constant",
    "var",
    "exp",
    "log",
    "softplus",
    "sigmoid",
    "sum_reduce",
    "evaluate",
    "gradient",
    "gradient_all",
    "line_restrict",
    "subspace_restrict",
]

# instrumentation: bumped once per reverse-mode sweep (read by tests)
GRAD_CALLS = 0


def _as_array(x):
    return np.asarray(x, dtype=np.float64)


def _broadcast_shape(sa, sb, op):
    if sa == sb:
        return sa
    if sa == ():
        return sb
    if sb == ():
        return sa
    raise ShapeError(f"{op}: shapes {sa} and {sb} need scalar-tensor broadcasting")


class Node:
    """One operation in the DAG.  Instances are immutable and shareable."""

    __slots__ = ("kind", "shape", "children", "payload")

    def __init__(self, kind, shape, children=(), payload=None):
        self.kind = kind
        self.shape = tuple(shape)
        self.children = tuple(children)
        self.payload = payload

    # -- construction sugar -------------------------------------------------
    def __add__(self, other):
        other = _wrap(other)
        return Node("add", _broadcast_shape(self.shape, other.shape, "add"), (self, other))

    def __radd__(self, other):
        return _wrap(other) + self

    def __sub__(self, other):
        other = _wrap(other)
        return Node("sub", _broadcast_shape(self.shape, other.shape, "sub"), (self, other))

    def __rsub__(self, other):
        return _wrap(other) - self

    def __mul__(self, other):
        other = _wrap(other)
        return Node("mul", _broadcast_shape(self.shape, other.shape, "mul"), (self, other))

    def __rmul__(self, other):
        return _wrap(other) * self

    def __neg__(self):
        return constant(-1.0) * self

    def __matmul__(self, other):
        other = _wrap(other)
        sa, sb = self.shape, other.shape
        if len(sa) == 2 and len(sb) == 2 and sa[1] == sb[0]:
            out = (sa[0], sb[1])
        elif len(sa) == 2 and len(sb) == 1 and sa[1] == sb[0]:
            out = (sa[0],)
        else:
            raise ShapeError(f"matmul: incompatible shapes {sa} and {sb}")
        return Node("matmul", out, (self, other))

    def __pow__(self, m):
        if not isinstance(m, int) or m < 0:
            raise ValueError("graph powers must be nonnegative integers")
        return Node("intpow", self.shape, (self,), payload=m)

    def __repr__(self):
        return f"Node({self.kind}, shape={self.shape})"


def _wrap(x):
    return x if isinstance(x, Node) else constant(x)


def constant(value) -> Node:
    value = _as_array(value)
    if not np.all(np.isfinite(value)):
        raise ValueError("graph constants must be finite")
    return Node("const", value.shape, payload=value)


def var(name: str, shape=()) -> Node:
    return Node("var", tuple(shape), payload=name)


def _unary(fn, x: Node) -> Node:
    return Node("unary", x.shape, (x,), payload=fn)


def exp(x):
    return _unary("exp", _wrap(x))


def log(x):
    return _unary("log", _wrap(x))


def softplus(x):
    return _unary("softplus", _wrap(x))


def sigmoid(x):
    return _unary("sigmoid", _wrap(x))


def sum_reduce(x):
    return Node("sum", (), (_wrap(x),))


def affine_leaf(eta_name, x0, dirs) -> Node:
    """Leaf valued x0 + sum_i eta_i * dirs[i] for the vector variable eta."""
    x0 = _as_array(x0)
    dirs = _as_array(dirs)
    if dirs.shape[1:] != x0.shape:
        raise ShapeError(f"direction stack {dirs.shape} does not match {x0.shape}")
    return Node("affine", x0.shape, payload=(eta_name, x0, dirs))


class ExprGraph:
    """A DAG with a scalar output node and a cached topological order."""

    def __init__(self, output: Node):
        if output.shape != ():
            raise ShapeError(f"graph output must be scalar, got {output.shape}")
        self.output = output
        self.topo = _toposort(output)
        self.index = {id(n): i for i, n in enumerate(self.topo)}
        self.variables = {}
        for n in self.topo:
            if n.kind == "var":
                prev = self.variables.setdefault(n.payload, n.shape)
                if prev != n.shape:
                    raise ShapeError(f"variable {n.payload!r} used with shapes {prev} and {n.shape}")
            elif n.kind == "affine":
                name, _, dirs = n.payload
                d = dirs.shape[0]
                prev = self.variables.setdefault(name, (d,))
                if prev != (d,):
                    raise ShapeError(f"variable {name!r} used with shapes {prev} and {(d,)}")


def _toposort(root: Node):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for c in node.children:
            stack.append((c, False))
    return order


def _check_bindings(g: ExprGraph, bindings):
    out = {}
    for name, shape in g.variables.items():
        if name not in bindings:
            raise UnboundVariable(f"no binding for variable {name!r}")
        val = _as_array(bindings[name])
        if val.shape != shape:
            raise ShapeError(f"binding for {name!r} has shape {val.shape}, expected {shape}")
        out[name] = val
    return out


def _forward(g: ExprGraph, bindings):
    vals = [None] * len(g.topo)
    ix = g.index
    for i, n in enumerate(g.topo):
        k = n.kind
        if k == "const":
            vals[i] = n.payload
        elif k == "var":
            vals[i] = bindings[n.payload]
        elif k == "affine":
            name, x0, dirs = n.payload
            eta = bindings[name]
            vals[i] = x0 + np.tensordot(eta, dirs, axes=([0], [0]))
        elif k == "add":
            vals[i] = vals[ix[id(n.children[0])]] + vals[ix[id(n.children[1])]]
        elif k == "sub":
            vals[i] = vals[ix[id(n.children[0])]] - vals[ix[id(n.children[1])]]
        elif k == "mul":
            vals[i] = vals[ix[id(n.children[0])]] * vals[ix[id(n.children[1])]]
        elif k == "matmul":
            vals[i] = vals[ix[id(n.children[0])]] @ vals[ix[id(n.children[1])]]
        elif k == "sum":
            vals[i] = np.sum(vals[ix[id(n.children[0])]])
        elif k == "unary":
            z = vals[ix[id(n.children[0])]]
            if n.payload == "log" and np.any(z <= 0.0):
                raise DomainError("log of a nonpositive value")
            vals[i] = funcs.apply_fn(n.payload, z)
        elif k == "intpow":
            vals[i] = vals[ix[id(n.children[0])]] ** n.payload
        else:
            raise AssertionError(f"unknown node kind {k}")
    return vals


def evaluate(g: ExprGraph, bindings) -> float:
    """Forward evaluation; returns the scalar output."""
    b = _check_bindings(g, bindings)
    return float(_forward(g, b)[-1])


def _reduce_to(adj, shape):
    # collapse an adjoint onto a scalar-broadcast operand
    if adj.shape == shape:
        return adj
    if shape == ():
        return np.sum(adj)
    raise AssertionError("adjoint/operand shape mismatch")


def gradient_all(g: ExprGraph, bindings):
    """Reverse-mode gradient of the scalar output w.r.t. every variable."""
    global GRAD_CALLS
    GRAD_CALLS += 1
    b = _check_bindings(g, bindings)
    vals = _forward(g, b)
    ix = g.index
    adj = [None] * len(g.topo)
    adj[-1] = np.float64(1.0)
    grads = {name: np.zeros(shape) for name, shape in g.variables.items()}

    def bump(node, delta):
        i = ix[id(node)]
        if adj[i] is None:
            adj[i] = np.zeros(node.shape)
        adj[i] = adj[i] + delta

    for i in range(len(g.topo) - 1, -1, -1):
        n = g.topo[i]
        a = adj[i]
        if a is None:
            continue
        a = np.asarray(a)
        k = n.kind
        if k == "var":
            grads[n.payload] = grads[n.payload] + a
        elif k == "affine":
            name, _, dirs = n.payload
            grads[name] = grads[name] + np.tensordot(dirs, a, axes=a.ndim)
        elif k == "add":
            l, r = n.children
            bump(l, _reduce_to(a, l.shape))
            bump(r, _reduce_to(a, r.shape))
        elif k == "sub":
            l, r = n.children
            bump(l, _reduce_to(a, l.shape))
            bump(r, _reduce_to(-a, r.shape))
        elif k == "mul":
            l, r = n.children
            lv = vals[ix[id(l)]]
            rv = vals[ix[id(r)]]
            bump(l, _reduce_to(a * rv, l.shape))
            bump(r, _reduce_to(a * lv, r.shape))
        elif k == "matmul":
            l, r = n.children
            lv = vals[ix[id(l)]]
            rv = vals[ix[id(r)]]
            if rv.ndim == 2:
                bump(l, a @ rv.T)
                bump(r, lv.T @ a)
            else:  # matrix @ vector
                bump(l, np.outer(a, rv))
                bump(r, lv.T @ a)
        elif k == "sum":
            (c,) = n.children
            bump(c, np.broadcast_to(a, c.shape))
        elif k == "unary":
            (c,) = n.children
            bump(c, a * funcs.apply_fn_deriv(n.payload, vals[ix[id(c)]]))
        elif k == "intpow":
            (c,) = n.children
            m = n.payload
            if m == 0:
                continue
            bump(c, a * m * vals[ix[id(c)]] ** (m - 1))
        # const: nothing to do
    return grads


def gradient(g: ExprGraph, bindings, wrt: str):
    """Gradient with respect to one bound variable."""
    grads = gradient_all(g, bindings)
    if wrt not in grads:
        raise UnboundVariable(f"{wrt!r} is not a variable of this graph")
    return grads[wrt]


def _rebuild(node, memo, sub):
    key = id(node)
    if key in memo:
        return memo[key]
    if node.kind == "var":
        new = sub(node)
    elif node.children:
        new = Node(node.kind, node.shape, tuple(_rebuild(c, memo, sub) for c in node.children), node.payload)
    else:
        new = node
    memo[key] = new
    return new


def line_restrict(g: ExprGraph, x0, v) -> ExprGraph:
    """Restrict f along a line: h(eta) = f(x0 + eta * v), scalar eta."""
    eta = var("eta", ())

    def sub(node):
        name = node.payload
        if name not in x0 or name not in v:
            raise UnboundVariable(f"restriction misses variable {name!r}")
        x0w = _as_array(x0[name])
        vw = _as_array(v[name])
        if x0w.shape != node.shape or vw.shape != node.shape:
            raise ShapeError(f"restriction shapes for {name!r} do not match {node.shape}")
        return constant(x0w) + eta * constant(vw)

    return ExprGraph(_rebuild(g.output, {}, sub))


def subspace_restrict(g: ExprGraph, x0, U, d: int) -> ExprGraph:
    """Restrict f to a subspace: h(eta) = f(x0 + sum_i eta_i U_i), eta in R^d."""

    def sub(node):
        name = node.payload
        if name not in x0 or name not in U:
            raise UnboundVariable(f"restriction misses variable {name!r}")
        x0w = _as_array(x0[name])
        Uw = _as_array(U[name])
        if x0w.shape != node.shape:
            raise ShapeError(f"restriction shapes for {name!r} do not match {node.shape}")
        if Uw.shape != (d,) + node.shape:
            raise ShapeError(f"direction stack for {name!r} must have shape {(d,) + node.shape}")
        return affine_leaf("eta", x0w, Uw)

    return ExprGraph(_rebuild(g.output, {}, sub))
