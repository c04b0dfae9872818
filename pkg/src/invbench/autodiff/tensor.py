"""Reverse-mode automatic differentiation on dense float64 arrays.

Ops work at vector/matrix granularity: each Tensor wraps one numpy array
and remembers how to push gradients to its parents. Every op validates
that its output is finite, so NaN/Inf surfaces immediately with the name
of the op that produced it.
"""

from __future__ import annotations

import numpy as np


class NonFiniteError(ArithmeticError):
    """An op produced NaN or Inf. `op` names the producing operation."""

    def __init__(self, op: str, detail: str = ""):
        self.op = op
        msg = f"non-finite value produced by op '{op}'"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ShapeError(ValueError):
    pass


def _check_finite(arr: np.ndarray, op: str) -> None:
    # any NaN/Inf entry makes the sum non-finite, so one reduction suffices
    if not np.isfinite(arr.sum()):
        raise NonFiniteError(op)


class Tensor:
    """A node in the computation graph.

    Leaves created directly hold data; results of ops additionally hold
    `(parent, vjp)` pairs used by `backward`. Gradients accumulate into
    `.grad` as plain numpy arrays.
    """

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _op: str = "leaf"):
        self.data = np.asarray(data, dtype=np.float64)
        _check_finite(self.data, _op)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.op = _op
        self._parents = _parents

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def backward(self) -> None:
        backward(self)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self.op!r})"

    # operator sugar; constants are promoted to grad-less leaves
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, op: str, parents) -> Tensor:
    """Build a result node, dropping the tape when no parent needs grads."""
    recorded = tuple((p, vjp) for p, vjp in parents if p.requires_grad or p._parents)
    out = Tensor(data, _parents=recorded, _op=op)
    out.requires_grad = any(p.requires_grad for p, _ in parents)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    out = a.data + b.data
    return _make(out, "add", [
        (a, lambda g: _unbroadcast(g, a.data.shape)),
        (b, lambda g: _unbroadcast(g, b.data.shape)),
    ])


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = a.data - b.data
    return _make(out, "sub", [
        (a, lambda g: _unbroadcast(g, a.data.shape)),
        (b, lambda g: _unbroadcast(-g, b.data.shape)),
    ])


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data * b.data
    return _make(out, "mul", [
        (a, lambda g: _unbroadcast(g * b.data, a.data.shape)),
        (b, lambda g: _unbroadcast(g * a.data, b.data.shape)),
    ])


def div(a: Tensor, b: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data
    _check_finite(out, "div")
    return _make(out, "div", [
        (a, lambda g: _unbroadcast(g / b.data, a.data.shape)),
        (b, lambda g: _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape)),
    ])


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, "neg", [(a, lambda g: -g)])


def square(a: Tensor) -> Tensor:
    return _make(a.data * a.data, "square", [(a, lambda g: g * (2.0 * a.data))])


# ---------------------------------------------------------------------------
# transcendental


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    _check_finite(out, "exp")
    return _make(out, "exp", [(a, lambda g: g * out)])


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    _check_finite(out, "log")
    return _make(out, "log", [(a, lambda g: g / a.data)])


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _make(out, "tanh", [(a, lambda g: g * (1.0 - out * out))])


def sin(a: Tensor) -> Tensor:
    return _make(np.sin(a.data), "sin", [(a, lambda g: g * np.cos(a.data))])


def cos(a: Tensor) -> Tensor:
    return _make(np.cos(a.data), "cos", [(a, lambda g: -g * np.sin(a.data))])


def softplus(a: Tensor) -> Tensor:
    out = np.logaddexp(0.0, a.data)
    # d/dx log(1+e^x) = sigmoid(x), written via tanh for stability
    return _make(out, "softplus", [(a, lambda g: g * 0.5 * (1.0 + np.tanh(0.5 * a.data)))])


def leaky_relu(a: Tensor, slope: float = 0.01) -> Tensor:
    # max picks the identity branch for slope <= 1, min for expanding slopes
    scaled = a.data * slope
    out = np.maximum(a.data, scaled) if slope <= 1.0 else np.minimum(a.data, scaled)
    return _make(out, "leaky_relu",
                 [(a, lambda g: g * np.where(a.data >= 0.0, 1.0, slope))])


# ---------------------------------------------------------------------------
# linear algebra / structure


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.data.shape} @ {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    out = a.data @ b.data
    _check_finite(out, "matmul")
    return _make(out, "matmul", [
        (a, lambda g: g @ b.data.T),
        (b, lambda g: a.data.T @ g),
    ])


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Fused x @ w + b for the linear-layer hot path."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[0]:
        raise ShapeError(f"affine shape mismatch: {x.data.shape} @ {w.data.shape}")
    out = x.data @ w.data + b.data
    _check_finite(out, "affine")
    return _make(out, "affine", [
        (x, lambda g: g @ w.data.T),
        (w, lambda g: x.data.T @ g),
        (b, lambda g: _unbroadcast(g, b.data.shape)),
    ])


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError("transpose expects a matrix")
    return _make(a.data.T.copy(), "transpose", [(a, lambda g: g.T)])


def concat(tensors, axis: int = 1) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    widths = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + widths)

    def _split(g, i):
        sl = [slice(None)] * g.ndim
        sl[axis] = slice(offsets[i], offsets[i + 1])
        return g[tuple(sl)]

    return _make(out, "concat", [
        (t, (lambda g, i=i: _split(g, i))) for i, t in enumerate(tensors)
    ])


def cols(a: Tensor, idx) -> Tensor:
    """Gather columns of a matrix; also serves for fixed permutations."""
    if a.data.ndim != 2:
        raise ShapeError("cols expects a matrix")
    idx = np.asarray(idx, dtype=np.intp)
    out = a.data[:, idx]

    def vjp(g):
        full = np.zeros_like(a.data)
        np.add.at(full, (slice(None), idx), g)
        return full

    return _make(out, "cols", [(a, vjp)])


# ---------------------------------------------------------------------------
# reductions


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, a.data.shape).copy()
        gg = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(gg, a.data.shape).copy()

    return _make(out, "sum", [(a, vjp)])


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        n = a.data.size
    else:
        n = a.data.shape[axis]
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / n)


# ---------------------------------------------------------------------------
# backward pass


def backward(loss: Tensor) -> None:
    """Reverse-mode sweep from a scalar loss.

    Visits each reachable node exactly once in reverse topological order
    and accumulates `.grad` on every tensor with `requires_grad`.
    Non-parameter leaves are left untouched.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.data.shape}")

    topo = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad and not node._parents:
            node.grad = g if node.grad is None else node.grad + g
        for parent, vjp in node._parents:
            pg = vjp(g)
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
