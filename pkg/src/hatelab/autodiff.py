"""Minimal define-by-run tensor engine with reverse-mode gradients.

Every operation on a :class:`Tensor` that requires a gradient records its
parents and a closure mapping the output gradient to parent gradients. The
graph is rebuilt on every forward pass; :func:`backward` walks it in reverse
topological order. All data is float64.
"""
from __future__ import annotations

import contextlib
import threading
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import EncodingError, ShapeError

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """Disable graph recording in the current thread."""
    prev = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "op", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, _parents: tuple = (), _backward=None, op: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents = _parents
        self._backward = _backward
        self.op = op

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op or 'leaf'}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_lift(other)))

    def __rsub__(self, other):
        return add(_lift(other), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None):
        return tsum(self, axis)


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents: tuple[Tensor, ...], backward_fn, op: str) -> Tensor:
    if grad_enabled() and any(p.requires_grad for p in parents):
        return Tensor(data, True, parents, backward_fn, op)
    return Tensor(data, op=op)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


def _broadcast_check(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None


# ---------------------------------------------------------------------------
# core operations


def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_check(a, b, "add")
    return _make(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
        "add",
    )


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: (-g,), "neg")


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_check(a, b, "mul")
    return _make(
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
        "mul",
    )


def matmul(a, b) -> Tensor:
    """``a @ b`` for ``a`` of shape (..., k) and a 2-D ``b`` of shape (k, n)."""
    a, b = _lift(a), _lift(b)
    if b.ndim != 2 or a.ndim < 1 or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
    k, n = b.shape

    def backward(g):
        ga = g @ b.data.T
        gb = a.data.reshape(-1, k).T @ g.reshape(-1, n)
        return ga, gb

    return _make(a.data @ b.data, (a, b), backward, "matmul")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [_lift(t) for t in tensors]
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        shapes = ", ".join(str(t.shape) for t in tensors)
        raise ShapeError(f"concat: shapes {shapes} do not conform on axis {axis}") from None
    cuts = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, cuts, axis=axis))

    return _make(data, tuple(tensors), backward, "concat")


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_lift(t) for t in tensors]
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise ShapeError(f"stack: shapes {sorted(shapes)} differ")
    data = np.stack([t.data for t in tensors], axis=axis)

    def backward(g):
        return tuple(np.moveaxis(g, axis, 0))

    return _make(data, tuple(tensors), backward, "stack")


def _is_basic_index(idx) -> bool:
    parts = idx if isinstance(idx, tuple) else (idx,)
    return all(isinstance(p, (int, np.integer, slice)) or p is None or p is Ellipsis for p in parts)


def getitem(a: Tensor, idx) -> Tensor:
    basic = _is_basic_index(idx)

    def backward(g):
        full = np.zeros_like(a.data)
        if basic:
            full[idx] = g
        else:
            np.add.at(full, idx, g)
        return (full,)

    return _make(a.data[idx], (a,), backward, "getitem")


def tsum(a: Tensor, axis=None) -> Tensor:
    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _make(a.data.sum(axis=axis), (a,), backward, "sum")


def sigmoid(a: Tensor) -> Tensor:
    s = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return _make(s, (a,), lambda g: (g * s * (1.0 - s),), "sigmoid")


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.data)
    return _make(t, (a,), lambda g: (g * (1.0 - t * t),), "tanh")


def relu(a: Tensor) -> Tensor:
    on = a.data > 0
    return _make(np.where(on, a.data, 0.0), (a,), lambda g: (g * on,), "relu")


def dropout(a: Tensor, keep_prob: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout; the identity (same object) when not training."""
    if not 0.0 < keep_prob <= 1.0:
        raise ValueError(f"keep_prob must be in (0, 1], got {keep_prob}")
    if not training or keep_prob == 1.0:
        return a
    if rng is None:
        raise ValueError("dropout in train mode needs an rng")
    scale = (rng.random(a.shape) < keep_prob) / keep_prob
    return _make(a.data * scale, (a,), lambda g: (g * scale,), "dropout")


def embedding_lookup(table: Tensor, ids) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise EncodingError(f"token id out of range [0, {table.shape[0]})")

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        return (full,)

    return _make(table.data[ids], (table,), backward, "embedding")


def max_over_time(a: Tensor) -> Tensor:
    """Max over the time axis: axis 0 for a 1-D sequence, else the second-to-last axis.

    The gradient goes to the first maximal position only.
    """
    axis = 0 if a.ndim == 1 else a.ndim - 2
    arg = np.expand_dims(np.argmax(a.data, axis=axis), axis)
    out = np.take_along_axis(a.data, arg, axis=axis).squeeze(axis)

    def backward(g):
        full = np.zeros_like(a.data)
        np.put_along_axis(full, arg, np.expand_dims(g, axis), axis=axis)
        return (full,)

    return _make(out, (a,), backward, "max_over_time")


def log_softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - x.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean cross-entropy of integer ``labels`` under ``softmax(logits)``.

    ``logits`` is (C,) with a scalar label or (B, C) with B labels.
    """
    single = logits.ndim == 1
    z = logits.data[None, :] if single else logits.data
    y = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if z.ndim != 2 or y.shape != (z.shape[0],):
        raise ShapeError(f"softmax_cross_entropy: logits {logits.shape} vs labels {y.shape}")
    n_cls = z.shape[1]
    if y.size and (y.min() < 0 or y.max() >= n_cls):
        raise ValueError(f"label outside class range [0, {n_cls})")
    logp = log_softmax(z)
    rows = np.arange(len(y))
    loss = -logp[rows, y].mean()

    def backward(g):
        d = np.exp(logp)
        d[rows, y] -= 1.0
        d *= g / len(y)
        return (d[0] if single else d,)

    return _make(loss, (logits,), backward, "softmax_xent")


# ---------------------------------------------------------------------------
# reverse pass


def _topo(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack_: list[tuple[Tensor, bool]] = [(root, False)]
    while stack_:
        node, done = stack_.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack_.append((p, False))
    return order


def backward(loss: Tensor, params: Iterable[Tensor] | None = None) -> dict[Tensor, np.ndarray]:
    """Populate ``.grad`` on every requires-grad tensor reachable from ``loss``.

    Returns a map tensor -> gradient. When ``params`` is given the map covers
    exactly those tensors, with zeros for any not reachable from ``loss``.
    Otherwise it covers the reachable leaves.
    """
    if loss.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {}
    order = _topo(loss) if loss.requires_grad else []
    if order:
        grads[id(loss)] = np.ones_like(loss.data)
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None:
            continue
        node.grad = g
        if node._backward is None:
            continue
        for p, gp in zip(node._parents, node._backward(g)):
            if gp is None or not p.requires_grad:
                continue
            prev = grads.get(id(p))
            grads[id(p)] = gp if prev is None else prev + gp
    if params is None:
        return {t: t.grad for t in order if not t._parents}
    out = {}
    for p in params:
        if id(p) not in grads:
            p.grad = np.zeros_like(p.data)
        out[p] = p.grad
    return out


def grad_check(
    f: Callable[[Tensor], Tensor],
    point,
    eps: float = 1e-5,
    coords: Sequence[int] | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f`` maps a tensor shaped like ``point`` to a scalar tensor. The error
    per coordinate is ``|analytic - numeric| / max(1, |analytic|)``. ``coords``
    restricts the check to a subset of flat coordinates.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x0 = np.array(point, dtype=np.float64)
    t = Tensor(x0.copy(), requires_grad=True)
    out = f(t)
    analytic = backward(out, [t])[t].reshape(-1)
    if not (np.isfinite(out.data).all() and np.isfinite(analytic).all()):
        raise FloatingPointError("non-finite value in analytic gradient")
    flat = x0.reshape(-1)
    idx = range(flat.size) if coords is None else coords
    worst = 0.0
    for i in idx:
        xp = flat.copy()
        xp[i] += eps
        xm = flat.copy()
        xm[i] -= eps
        with no_grad():
            fp = f(Tensor(xp.reshape(x0.shape))).item()
            fm = f(Tensor(xm.reshape(x0.shape))).item()
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite function value near coordinate {i}")
        numeric = (fp - fm) / (2 * eps)
        err = abs(analytic[i] - numeric) / max(1.0, abs(analytic[i]))
        worst = max(worst, err)
    return worst
