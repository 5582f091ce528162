"""Reverse-mode automatic differentiation over float64 numpy arrays.

A ``Tensor`` wraps an ndarray and remembers how it was computed; calling
``backward()`` on a scalar result accumulates exact gradients into every
reachable parameter leaf.  Only the operations this project needs are
provided; broadcasting is supported for the elementwise ops.

All arithmetic is float64.  Ops never mutate their inputs, so values can be
shared freely between concurrent forward passes; the only mutable state is
the ``grad`` accumulator on parameter leaves.
"""

from __future__ import annotations

from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import DimensionError

Vjp = Callable[[np.ndarray], np.ndarray]


class Tensor:
    """Node in the computation graph.

    Leaves are created with :func:`parameter` (tracked, owns a ``grad``
    accumulator) or :func:`constant` (untracked).  Interior nodes are
    produced by the op functions below and keep vector-Jacobian-product
    closures back to the parents that require gradients.
    """

    __slots__ = ("value", "grad", "requires_grad", "name", "_parents")

    def __init__(
        self,
        value: np.ndarray,
        requires_grad: bool = False,
        name: str | None = None,
        _parents: tuple[tuple["Tensor", Vjp], ...] = (),
    ):
        self.value = np.asarray(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self._parents = _parents
        self.grad = np.zeros_like(self.value) if requires_grad and not _parents else None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0.0

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every reachable parameter leaf.

        Only defined for scalar results; gradients add onto existing
        accumulators, so call ``zero_grad`` between independent passes.
        """
        if self.value.ndim != 0:
            raise DimensionError(f"backward requires a scalar, got shape {self.value.shape}")
        order = _topo_order(self)
        grads: dict[int, np.ndarray] = {id(self): np.ones(())}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._parents:
                for parent, vjp in node._parents:
                    pg = vjp(g)
                    acc = grads.get(id(parent))
                    grads[id(parent)] = pg if acc is None else acc + pg
            else:
                if node.grad is None:
                    node.grad = np.zeros_like(node.value)
                node.grad += g  # in place: keeps 0-d grads as ndarrays

    # operator sugar; every operand may be a Tensor, ndarray or python scalar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.value.shape}{tag}, requires_grad={self.requires_grad})"


def constant(value, name: str | None = None) -> Tensor:
    """Untracked leaf; gradients never flow into it."""
    return Tensor(value, requires_grad=False, name=name)


def parameter(value, name: str | None = None) -> Tensor:
    """Tracked leaf with a zeroed gradient accumulator."""
    return Tensor(value, requires_grad=True, name=name)


def _topo_order(root: Tensor) -> list[Tensor]:
    # iterative DFS; graphs can be a few thousand nodes deep in long loops
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else constant(np.asarray(x, dtype=np.float64))


def _make(value: np.ndarray, links: Sequence[tuple[Tensor, Vjp]]) -> Tensor:
    tracked = tuple((p, vjp) for p, vjp in links if p.requires_grad)
    return Tensor(value, requires_grad=bool(tracked), _parents=tracked)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise ops


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.value + b.value
    return _make(out, [(a, lambda g: _unbroadcast(g, a.value.shape)),
                       (b, lambda g: _unbroadcast(g, b.value.shape))])


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.value - b.value
    return _make(out, [(a, lambda g: _unbroadcast(g, a.value.shape)),
                       (b, lambda g: _unbroadcast(-g, b.value.shape))])


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.value * b.value
    return _make(out, [(a, lambda g: _unbroadcast(g * b.value, a.value.shape)),
                       (b, lambda g: _unbroadcast(g * a.value, b.value.shape))])


def div(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.value / b.value
    return _make(out, [(a, lambda g: _unbroadcast(g / b.value, a.value.shape)),
                       (b, lambda g: _unbroadcast(-g * a.value / (b.value * b.value), b.value.shape))])


def neg(a) -> Tensor:
    a = _wrap(a)
    return _make(-a.value, [(a, lambda g: -g)])


def exp(a) -> Tensor:
    a = _wrap(a)
    out = np.exp(a.value)
    return _make(out, [(a, lambda g: g * out)])


def log(a) -> Tensor:
    a = _wrap(a)
    return _make(np.log(a.value), [(a, lambda g: g / a.value)])


def sqrt(a) -> Tensor:
    a = _wrap(a)
    out = np.sqrt(a.value)
    return _make(out, [(a, lambda g: g * 0.5 / out)])


def tanh(a) -> Tensor:
    a = _wrap(a)
    out = np.tanh(a.value)
    return _make(out, [(a, lambda g: g * (1.0 - out * out))])


def sigmoid(a) -> Tensor:
    a = _wrap(a)
    out = _sigmoid_values(a.value)
    return _make(out, [(a, lambda g: g * out * (1.0 - out))])


def relu(a) -> Tensor:
    a = _wrap(a)
    out = np.maximum(a.value, 0.0)
    return _make(out, [(a, lambda g: g * (a.value > 0.0))])


def identity(a) -> Tensor:
    return _wrap(a)


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp values; the gradient is passed through inside [lo, hi] and zero outside."""
    a = _wrap(a)
    out = np.clip(a.value, lo, hi)
    inside = (a.value >= lo) & (a.value <= hi)
    return _make(out, [(a, lambda g: g * inside)])


def _sigmoid_values(x: np.ndarray) -> np.ndarray:
    # split by sign to avoid overflow in exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# linear algebra and structure ops


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[1] != b.value.shape[0]:
        raise DimensionError(
            f"matmul: incompatible shapes {a.value.shape} and {b.value.shape}"
        )
    out = a.value @ b.value
    return _make(out, [(a, lambda g: g @ b.value.T),
                       (b, lambda g: a.value.T @ g)])


def transpose(a) -> Tensor:
    a = _wrap(a)
    if a.value.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {a.value.shape}")
    return _make(a.value.T.copy(), [(a, lambda g: g.T)])


def reshape(a, shape: tuple[int, ...]) -> Tensor:
    a = _wrap(a)
    return _make(a.value.reshape(shape), [(a, lambda g: g.reshape(a.value.shape))])


def sum_(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = _wrap(a)
    out = a.value.sum(axis=axis, keepdims=keepdims)

    def vjp(g: np.ndarray) -> np.ndarray:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, a.value.shape).copy()

    return _make(out, [(a, vjp)])


def mean(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = _wrap(a)
    count = a.value.size if axis is None else a.value.shape[axis]
    return sum_(a, axis=axis, keepdims=keepdims) / float(count)


def max_(a, axis: int) -> Tensor:
    """Max-reduce along one axis; gradient routes to the first argmax."""
    a = _wrap(a)
    idx = a.value.argmax(axis=axis)
    out = np.take_along_axis(a.value, np.expand_dims(idx, axis), axis=axis).squeeze(axis)

    def vjp(g: np.ndarray) -> np.ndarray:
        z = np.zeros_like(a.value)
        np.put_along_axis(z, np.expand_dims(idx, axis), np.expand_dims(g, axis), axis=axis)
        return z

    return _make(out, [(a, vjp)])


def concat(parts: Sequence[Tensor], axis: int) -> Tensor:
    parts = [_wrap(p) for p in parts]
    out = np.concatenate([p.value for p in parts], axis=axis)
    links = []
    offset = 0
    for p in parts:
        width = p.value.shape[axis]
        lo = offset

        def vjp(g: np.ndarray, lo=lo, width=width) -> np.ndarray:
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, lo + width)
            return g[tuple(sl)]

        links.append((p, vjp))
        offset += width
    return _make(out, links)


def gather_rows(a, idx: np.ndarray) -> Tensor:
    """Select rows of a matrix; ``idx`` may be any integer-array shape."""
    a = _wrap(a)
    idx = np.asarray(idx)
    out = a.value[idx]

    def vjp(g: np.ndarray) -> np.ndarray:
        z = np.zeros_like(a.value)
        np.add.at(z, idx, g)
        return z

    return _make(out, [(a, vjp)])


def take_per_row(a, cols: np.ndarray) -> Tensor:
    """Pick one entry per row of a matrix: out[i] = a[i, cols[i]]."""
    a = _wrap(a)
    cols = np.asarray(cols)
    rows = np.arange(a.value.shape[0])
    out = a.value[rows, cols]

    def vjp(g: np.ndarray) -> np.ndarray:
        z = np.zeros_like(a.value)
        np.add.at(z, (rows, cols), g)
        return z

    return _make(out, [(a, vjp)])


def softmax_rows(a) -> Tensor:
    """Row-wise softmax of a matrix, stabilised by max subtraction."""
    a = _wrap(a)
    out = softmax_rows_values(a.value)

    def vjp(g: np.ndarray) -> np.ndarray:
        dot = (g * out).sum(axis=-1, keepdims=True)
        return out * (g - dot)

    return _make(out, [(a, vjp)])


def softmax_rows_values(x: np.ndarray) -> np.ndarray:
    """Plain-array stable row softmax; shared by the tape op and the matrix API."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# parameter containers


class ParamSet:
    """Ordered mapping of unique names to trainable leaves.

    Every entry is a :class:`Tensor` with ``requires_grad=True`` and a
    gradient accumulator of the same shape as its value.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = parameter(np.array(value, dtype=np.float64), name=name)
        self._params[name] = t
        return t

    def add_tensor(self, name: str, t: Tensor) -> Tensor:
        """Register an existing leaf under ``name``; the tensor is shared, not copied."""
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        if not t.requires_grad or t._parents:
            raise ValueError(f"{name!r} is not a trainable leaf")
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._params.items())

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.zero_grad()

    def values_map(self) -> dict[str, np.ndarray]:
        return {name: t.value.copy() for name, t in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        for name, arr in values.items():
            t = self._params[name]
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != t.value.shape:
                raise DimensionError(
                    f"parameter {name!r}: expected shape {t.value.shape}, got {arr.shape}"
                )
            t.value = arr.copy()

    def copy(self) -> "ParamSet":
        out = ParamSet()
        for name, t in self._params.items():
            out.add(name, t.value)
        return out
