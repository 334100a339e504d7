# autodiff/tensor.py
"""
Dense float64 tensors with reverse-mode automatic differentiation.

Design notes:
- Every primitive builds its output through ``Tensor._make`` which records the
  parents and a backward closure only when some parent requires grad.
- A backward closure receives the upstream gradient and returns one gradient
  (or None) per parent. The engine owns accumulation, so closures stay pure.
- Only leaves keep ``.grad``. Intermediate gradients live in a per-call dict,
  which makes repeated ``backward()`` calls accumulate into leaves exactly like
  a second mini-batch would, without double counting inner nodes.
- Every primitive output is checked for NaN/Inf and raises instead of letting
  non-finite values travel further.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from core.errors import ArgumentError, NumericDomainError, ShapeError, VocabularyError

# Probabilities entering a log are clamped to [PROB_EPS, 1 - PROB_EPS].
PROB_EPS = 1e-7

BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Tensor:
    # Let ``ndarray * Tensor`` fall through to Tensor.__rmul__.
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None
        self._op = "leaf"

    @classmethod
    def _make(
        cls,
        data: np.ndarray,
        parents: Sequence[Tensor],
        backward: BackwardFn,
        op: str,
    ) -> Tensor:
        data = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(data)):
            raise NumericDomainError(f"{op} produced non-finite values")

        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out._op = op
        out.requires_grad = any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    # -----------------------------------------------------------------
    # Introspection
    # -----------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ArgumentError(f"item() needs a single value, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self._op}{flag})"

    # -----------------------------------------------------------------
    # Backward
    # -----------------------------------------------------------------

    def _topological_order(self) -> list[Tensor]:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self) -> None:
        """
        Populate ``.grad`` of every requires_grad leaf reachable from this scalar.

        Gradients accumulate across calls; call ``zero_grad`` (or the
        optimizer's) between steps.
        """
        if self.data.size != 1:
            raise ArgumentError(
                f"backward() needs a scalar loss, got shape {self.shape}"
            )
        if not self.requires_grad:
            return

        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(self._topological_order()):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    # -----------------------------------------------------------------
    # Operator sugar
    # -----------------------------------------------------------------

    def __add__(self, other) -> Tensor:
        return add(self, other)

    def __radd__(self, other) -> Tensor:
        return add(other, self)

    def __sub__(self, other) -> Tensor:
        return sub(self, other)

    def __rsub__(self, other) -> Tensor:
        return sub(other, self)

    def __mul__(self, other) -> Tensor:
        return mul(self, other)

    def __rmul__(self, other) -> Tensor:
        return mul(other, self)

    def __truediv__(self, other) -> Tensor:
        return div(self, other)

    def __rtruediv__(self, other) -> Tensor:
        return div(other, self)

    def __neg__(self) -> Tensor:
        return neg(self)

    def __matmul__(self, other) -> Tensor:
        return matmul(self, other)

    def __getitem__(self, index) -> Tensor:
        return take(self, index)

    def sum(self, axis=None, keepdims: bool = False) -> Tensor:
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> Tensor:
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> Tensor:
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def relu(self) -> Tensor:
        return relu(self)

    def sigmoid(self) -> Tensor:
        return sigmoid(self)

    def log(self) -> Tensor:
        return log(self)

    def exp(self) -> Tensor:
        return exp(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")


# ---------------------------------------------------------------------
# Elementwise binary
# ---------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._make(a.data + b.data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._make(a.data - b.data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor._make(a.data * b.data, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "div")
    if np.any(b.data == 0):
        raise NumericDomainError("div: division by zero")

    def backward(g):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )

    return Tensor._make(a.data / b.data, (a, b), backward, "div")


# ---------------------------------------------------------------------
# Elementwise unary
# ---------------------------------------------------------------------


def neg(x) -> Tensor:
    x = as_tensor(x)
    return Tensor._make(-x.data, (x,), lambda g: (-g,), "neg")


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    # exp(-|x|) never overflows; both branches agree at 0 (gives exactly 0.5).
    z = np.exp(-np.abs(x.data))
    s = np.where(x.data >= 0, 1.0 / (1.0 + z), z / (1.0 + z))

    def backward(g):
        return (g * s * (1.0 - s),)

    return Tensor._make(s, (x,), backward, "sigmoid")


def log(x) -> Tensor:
    x = as_tensor(x)
    if np.any(x.data <= 0):
        bad = float(x.data[x.data <= 0].reshape(-1)[0])
        raise NumericDomainError(f"log of non-positive value {bad!r}")

    def backward(g):
        return (g / x.data,)

    return Tensor._make(np.log(x.data), (x,), backward, "log")


def exp(x) -> Tensor:
    x = as_tensor(x)
    with np.errstate(over="ignore"):
        out = np.exp(x.data)

    def backward(g):
        return (g * out,)

    return Tensor._make(out, (x,), backward, "exp")


def relu(x) -> Tensor:
    x = as_tensor(x)
    active = x.data > 0

    def backward(g):
        return (g * active,)

    return Tensor._make(np.where(active, x.data, 0.0), (x,), backward, "relu")


def clamp(x, low: float, high: float) -> Tensor:
    """Clip into [low, high]; gradient is zero where clipping happened."""
    x = as_tensor(x)
    inside = (x.data >= low) & (x.data <= high)

    def backward(g):
        return (g * inside,)

    return Tensor._make(np.clip(x.data, low, high), (x,), backward, "clamp")


def clamp_prob(x) -> Tensor:
    return clamp(x, PROB_EPS, 1.0 - PROB_EPS)


_ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "sigmoid": sigmoid,
    "log": log,
    "exp": exp,
    "neg": neg,
}


def elementwise(op: str, *args) -> Tensor:
    """Name-dispatched elementwise primitive (add, sub, mul, sigmoid, log, exp, neg)."""
    fn = _ELEMENTWISE.get(op)
    if fn is None:
        raise ArgumentError(
            f"unknown elementwise op {op!r}; expected one of {sorted(_ELEMENTWISE)}"
        )
    return fn(*args)


def stop_gradient(x) -> Tensor:
    """Forward identity; nothing flows back to ``x`` or its ancestors."""
    x = as_tensor(x)
    return Tensor._make(x.data.copy(), (), lambda g: (), "stop_gradient")


# ---------------------------------------------------------------------
# Linear algebra / structure
# ---------------------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return Tensor._make(a.data @ b.data, (a, b), backward, "matmul")


def tsum(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return Tensor._make(out, (x,), backward, "sum")


def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    if x.size == 0:
        raise ArgumentError("mean of an empty tensor")
    if axis is None:
        count = x.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([x.shape[a] for a in axes]))
    return mul(tsum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {x.shape} as {tuple(shape)}")
    return Tensor._make(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def broadcast_to(x, shape) -> Tensor:
    x = as_tensor(x)
    try:
        out = np.broadcast_to(x.data, shape).copy()
    except ValueError:
        raise ShapeError(f"broadcast_to: cannot expand {x.shape} to {tuple(shape)}")
    return Tensor._make(
        out, (x,), lambda g: (_unbroadcast(g, x.shape),), "broadcast_to"
    )


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ArgumentError("concat of an empty list")
    ndim = tensors[0].ndim
    ax = axis % ndim if ndim else 0
    for t in tensors[1:]:
        same_rest = t.ndim == ndim and all(
            t.shape[i] == tensors[0].shape[i] for i in range(ndim) if i != ax
        )
        if not same_rest:
            raise ShapeError(
                f"concat on axis {axis}: shapes {[t.shape for t in tensors]} disagree"
            )
    if len(tensors) == 1:
        return tensors[0]

    bounds = np.cumsum([t.shape[ax] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=ax))

    return Tensor._make(
        np.concatenate([t.data for t in tensors], axis=ax), tensors, backward, "concat"
    )


def take(x, index) -> Tensor:
    """Numpy-style indexing; backward scatter-adds into the source."""
    x = as_tensor(x)
    out = x.data[index]

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        return (full,)

    return Tensor._make(np.array(out, dtype=np.float64), (x,), backward, "take")


def gather_rows(table: Tensor, ids) -> Tensor:
    """
    Embedding lookup: output[..., :] = table[ids[...], :].

    Backward scatter-adds into table rows, so duplicate ids accumulate.
    """
    ids = np.asarray(ids)
    if ids.size and not np.issubdtype(ids.dtype, np.integer):
        raise ArgumentError(f"gather_rows needs integer ids, got dtype {ids.dtype}")
    ids = ids.astype(np.int64, copy=False)
    if table.ndim != 2:
        raise ShapeError(f"gather_rows needs a 2-D table, got {table.shape}")
    n_rows, dim = table.shape
    bad = (ids < 0) | (ids >= n_rows)
    if np.any(bad):
        first = int(ids[bad].reshape(-1)[0])
        raise VocabularyError(f"id {first} out of range for table with V={n_rows} rows")

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids.reshape(-1), g.reshape(-1, dim))
        return (full,)

    return Tensor._make(table.data[ids], (table,), backward, "gather_rows")


def softmax(x, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """
    Max-shifted softmax along ``axis``.

    With a boolean ``mask``, masked-out entries get exactly 0 and rows with no
    valid entry come out as all zeros.
    """
    x = as_tensor(x)
    if x.size == 0 or x.ndim == 0:
        raise ArgumentError(f"softmax of an empty input (shape {x.shape})")

    if mask is None:
        shifted = x.data - x.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
    else:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        peak = np.where(mask, x.data, -np.inf).max(axis=axis, keepdims=True)
        peak = np.where(np.isfinite(peak), peak, 0.0)
        e = np.where(mask, np.exp(np.where(mask, x.data - peak, 0.0)), 0.0)
    denom = e.sum(axis=axis, keepdims=True)
    y = e / np.where(denom > 0, denom, 1.0)

    def backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return Tensor._make(y, (x,), backward, "softmax")
