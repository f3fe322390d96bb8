"""Dense tensors with reverse-mode automatic differentiation.

A :class:`Tensor` wraps a numpy array. Operations on tensors that require
gradients record their parents and a backward closure; :func:`backward` walks
the recorded graph in reverse topological order.
"""
from __future__ import annotations

from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "op", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        arr = np.asarray(data)
        if arr.dtype.kind not in "f":
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.op = "leaf"
        self.name = name
        self._parents: Tuple[Tensor, ...] = ()
        self._backward: Optional[BackwardFn] = None

    # -- basic properties ---------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self.op}, requires_grad={self.requires_grad})"

    # -- arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return add(neg(self), other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def sum(self) -> "Tensor":
        return tsum(self)

    def mean(self) -> "Tensor":
        return tmean(self)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def backward(self) -> Dict[int, np.ndarray]:
        return backward(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def make_node(data: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn, op: str) -> Tensor:
    """Wrap an op result, checking finiteness and recording the graph edge."""
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"{op}: produced non-finite values")
    out = Tensor(data)
    out.op = op
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


# ---------------------------------------------------------------------------
# graph traversal
# ---------------------------------------------------------------------------


def topological_order(root: Tensor) -> List[Tensor]:
    """Nodes reachable from ``root`` that require grad, parents before children."""
    order: List[Tensor] = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> Dict[int, np.ndarray]:
    """Reverse-mode sweep from a scalar ``loss``.

    Sets ``.grad`` on every reachable leaf with ``requires_grad`` and returns
    the same gradients keyed by ``id(leaf)``.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.shape}")
    grads: Dict[int, np.ndarray] = {}
    if not loss.requires_grad:
        return grads
    pending: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topological_order(loss)):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            node.grad = g
            grads[id(node)] = g
            continue
        parent_grads = node._backward(g)
        for p, pg in zip(node._parents, parent_grads):
            if pg is None or not p.requires_grad:
                continue
            if pg.shape != p.shape:
                raise ShapeError(f"{node.op}: gradient shape {pg.shape} does not match input {p.shape}")
            key = id(p)
            if key in pending:
                pending[key] = pending[key] + pg
            else:
                pending[key] = pg
    return grads


# ---------------------------------------------------------------------------
# elementwise ops (exact shape match or scalar operand only)
# ---------------------------------------------------------------------------


def _binary_shapes(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape and a.size != 1 and b.size != 1:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


def _reduce_to(g: np.ndarray, like: Tensor) -> np.ndarray:
    if g.shape == like.shape:
        return g
    return np.asarray(g.sum(), dtype=g.dtype).reshape(like.shape)


def add(a, b) -> Tensor:
    if not isinstance(b, Tensor):
        a = as_tensor(a)
        c = b
        return make_node(a.data + c, (a,), lambda g: (g,), "add_const")
    a = as_tensor(a)
    _binary_shapes("add", a, b)
    return make_node(a.data + b.data, (a, b), lambda g: (_reduce_to(g, a), _reduce_to(g, b)), "add")


def sub(a, b) -> Tensor:
    if not isinstance(b, Tensor):
        a = as_tensor(a)
        c = b
        return make_node(a.data - c, (a,), lambda g: (g,), "sub_const")
    a = as_tensor(a)
    _binary_shapes("sub", a, b)
    return make_node(a.data - b.data, (a, b), lambda g: (_reduce_to(g, a), _reduce_to(-g, b)), "sub")


def mul(a, b) -> Tensor:
    if not isinstance(b, Tensor):
        return scale(a, b)
    a = as_tensor(a)
    _binary_shapes("mul", a, b)
    ad, bd = a.data, b.data

    def bw(g):
        return (_reduce_to(g * bd, a) if a.requires_grad else None,
                _reduce_to(g * ad, b) if b.requires_grad else None)

    return make_node(ad * bd, (a, b), bw, "mul")


def scale(a: Tensor, c: float) -> Tensor:
    a = as_tensor(a)
    if isinstance(c, np.ndarray) and c.size != 1 and c.shape != a.shape:
        raise ShapeError(f"scale: incompatible shapes {a.shape} and {c.shape}")
    return make_node(a.data * c, (a,), lambda g: (g * c,), "scale")


def neg(a: Tensor) -> Tensor:
    return make_node(-a.data, (a,), lambda g: (-g,), "neg")


def tabs(a: Tensor) -> Tensor:
    """|a| with subgradient sign(0) = 0."""
    s = np.sign(a.data)
    return make_node(np.abs(a.data), (a,), lambda g: (g * s,), "abs")


def tsum(a: Tensor) -> Tensor:
    shape, dt = a.shape, a.dtype
    return make_node(np.asarray(a.data.sum(), dtype=dt), (a,), lambda g: (np.full(shape, g, dtype=dt),), "sum")


def tmean(a: Tensor) -> Tensor:
    shape, dt, n = a.shape, a.dtype, a.size
    return make_node(np.asarray(a.data.mean(), dtype=dt), (a,), lambda g: (np.full(shape, g / n, dtype=dt),), "mean")


def reshape(a: Tensor, shape) -> Tensor:
    old = a.shape
    return make_node(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),), "reshape")


def l1_mean(a: Tensor, b) -> Tensor:
    """Mean absolute difference; ``b`` may be a tensor or a constant array."""
    b = as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"l1_mean: incompatible shapes {a.shape} and {b.shape}")
    diff = a.data - b.data
    s = np.sign(diff)
    n = diff.size

    def bw(g):
        ga = g * s / n
        return (ga if a.requires_grad else None, -ga if b.requires_grad else None)

    return make_node(np.asarray(np.abs(diff).mean(), dtype=diff.dtype), (a, b), bw, "l1_mean")
