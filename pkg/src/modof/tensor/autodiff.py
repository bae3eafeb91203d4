"""Tape-based reverse-mode autodiff over float64 numpy arrays.

Broadcasting is limited to adding a row vector to every row of a matrix.
"""
from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from .._kernels import scatter_add_rows

_grad_enabled = True


class ShapeError(ValueError):
    pass


@contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self.data.size != 1:
            raise ShapeError(f"backward needs a scalar, got shape {self.shape}")
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for p, pg in zip(node._parents, node._backward(g)):
                if pg is None or not p.requires_grad:
                    continue
                prev = grads.get(id(p))
                grads[id(p)] = pg if prev is None else prev + pg

    __add__ = lambda self, other: add(self, other)
    __radd__ = lambda self, other: add(other, self)
    __sub__ = lambda self, other: sub(self, other)
    __rsub__ = lambda self, other: sub(other, self)
    __mul__ = lambda self, other: mul(self, other)
    __rmul__ = lambda self, other: mul(other, self)
    __neg__ = lambda self: scale(self, -1.0)
    __matmul__ = lambda self, other: matmul(self, other)
    __truediv__ = lambda self, c: scale(self, 1.0 / float(c))


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents, backward) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _same_shape(op, a, b):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not match")


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim == 2 and b.data.ndim == 1:
        if a.shape[1] != b.shape[0]:
            raise ShapeError(f"add: row bias {b.shape} does not fit {a.shape}")
        return _node(a.data + b.data, (a, b), lambda g: (g, g.sum(axis=0)))
    _same_shape("add", a, b)
    return _node(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("sub", a, b)
    return _node(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    if not isinstance(a, Tensor) and np.ndim(a) == 0:
        return scale(b, float(a))
    if not isinstance(b, Tensor) and np.ndim(b) == 0:
        return scale(a, float(b))
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("mul", a, b)
    ad, bd = a.data, b.data
    return _node(ad * bd, (a, b), lambda g: (g * bd, g * ad))


def scale(a: Tensor, c: float) -> Tensor:
    return _node(a.data * c, (a,), lambda g: (g * c,))


def add_scalar(a: Tensor, c: float) -> Tensor:
    return _node(a.data + c, (a,), lambda g: (g,))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim not in (1, 2) or bd.ndim not in (1, 2) or ad.shape[-1] != bd.shape[0]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} are incompatible")

    def back(g):
        if ad.ndim == 1 and bd.ndim == 1:
            return g * bd, g * ad
        if ad.ndim == 1:
            return bd @ g, np.outer(ad, g)
        if bd.ndim == 1:
            return np.outer(g, bd), ad.T @ g
        return g @ bd.T, ad.T @ g

    return _node(ad @ bd, (a, b), back)


def concat(parts, axis: int = 0) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    datas = [p.data for p in parts]
    try:
        out = np.concatenate(datas, axis=axis)
    except ValueError:
        raise ShapeError(f"concat: shapes {[p.shape for p in parts]} along axis {axis}") from None
    sizes = np.cumsum([d.shape[axis] for d in datas])[:-1]
    return _node(out, parts, lambda g: tuple(np.split(g, sizes, axis=axis)))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _node(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _node(y, (x,), lambda g: (g * (1.0 - y * y),))


def _sigmoid(v):
    return np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))), np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))


def sigmoid(x: Tensor) -> Tensor:
    y = _sigmoid(x.data)
    return _node(y, (x,), lambda g: (g * y * (1.0 - y),))


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    return _node(y, (x,), lambda g: (g * y,))


def log(x: Tensor) -> Tensor:
    xd = x.data
    return _node(np.log(xd), (x,), lambda g: (g / xd,))


def softmax(x: Tensor) -> Tensor:
    if x.data.ndim != 1:
        raise ShapeError(f"softmax expects a vector, got {x.shape}")
    z = x.data - x.data.max()
    e = np.exp(z)
    y = e / e.sum()
    return _node(y, (x,), lambda g: (y * (g - np.dot(g, y)),))


def log_softmax(x: Tensor) -> Tensor:
    if x.data.ndim != 1:
        raise ShapeError(f"log_softmax expects a vector, got {x.shape}")
    z = x.data - x.data.max()
    lse = np.log(np.exp(z).sum())
    y = z - lse
    p = np.exp(y)
    return _node(y, (x,), lambda g: (g - p * g.sum(),))


def sum_all(x: Tensor) -> Tensor:
    shape = x.shape
    return _node(np.asarray(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, shape).copy(),))


def sum_rows(x: Tensor) -> Tensor:
    """Column-wise sum of a matrix: (n, h) -> (h,)."""
    if x.data.ndim != 2:
        raise ShapeError(f"sum_rows expects a matrix, got {x.shape}")
    n = x.shape[0]
    return _node(x.data.sum(axis=0), (x,), lambda g: (np.broadcast_to(g, (n, g.shape[0])).copy(),))


def tile_rows(v: Tensor, k: int) -> Tensor:
    """Stack ``k`` copies of a vector into a (k, h) matrix."""
    if v.data.ndim != 1:
        raise ShapeError(f"tile_rows expects a vector, got {v.shape}")
    return _node(np.tile(v.data, (k, 1)), (v,), lambda g: (g.sum(axis=0),))


def index_select(x: Tensor, idx) -> Tensor:
    """Rows of a matrix (or entries of a vector) at the given indices; also an embedding lookup."""
    idx = np.asarray(idx, dtype=np.int64)
    n = x.shape[0]
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ShapeError(f"index_select: index out of range for shape {x.shape}")
    if x.data.ndim == 1:
        def back(g):
            out = np.zeros(n)
            np.add.at(out, idx, g)
            return (out,)
        return _node(x.data[idx], (x,), back)
    return _node(x.data[idx], (x,), lambda g: (scatter_add_rows(g, idx, n),))


def segment_sum(x: Tensor, seg, n_segments: int) -> Tensor:
    """out[s] = sum of rows r with seg[r] == s."""
    seg = np.asarray(seg, dtype=np.int64)
    if x.data.ndim != 2 or seg.shape[0] != x.shape[0]:
        raise ShapeError(f"segment_sum: {x.shape} rows vs {seg.shape} segment ids")
    out = scatter_add_rows(x.data, seg, n_segments)
    return _node(out, (x,), lambda g: (g[seg],))


def pick(x: Tensor, i: int) -> Tensor:
    """A single entry of a vector as a scalar tensor."""
    n = x.shape[0]

    def back(g):
        out = np.zeros(n)
        out[i] = g
        return (out,)

    return _node(np.asarray(x.data[i]), (x,), back)


def bce_with_logits(logit: Tensor, target: float) -> Tensor:
    """-[t log s(x) + (1-t) log(1-s(x))] computed stably."""
    x = logit.data
    val = np.maximum(x, 0) - x * target + np.log1p(np.exp(-np.abs(x)))
    s = _sigmoid(x)
    return _node(np.asarray(val), (logit,), lambda g: (g * (s - target),))


def gaussian_kl(mu: Tensor, logvar: Tensor) -> Tensor:
    """0.5 * sum(mu^2 + exp(logvar) - 1 - logvar)."""
    _same_shape("kl", mu, logvar)
    md, lv = mu.data, logvar.data
    val = 0.5 * np.sum(md * md + np.exp(lv) - 1.0 - lv)
    return _node(np.asarray(val), (mu, logvar), lambda g: (g * md, g * 0.5 * (np.exp(lv) - 1.0)))
