"""
Autograd - Minimal reverse-mode differentiation engine over float64 numpy arrays

Every value in the graph is a Node. Ops are registered by kind in a registry and
dispatched through forward_op(), which computes the value, checks it is finite,
and attaches the backward rule. backward() walks the graph once in reverse
topological order and accumulates (sums) gradients into every node.
"""

import contextlib
import logging
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import ContractError, DimensionError, NumericalError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[float]]

_GRAD_ENABLED = True


class IndexedGrad:
    """Row-sparse gradient contribution, accumulated with np.add.at."""

    __slots__ = ("rows", "values")

    def __init__(self, rows: np.ndarray, values: np.ndarray):
        self.rows = rows
        self.values = values


class Node:
    """
    A value in the computation graph.

    Leaf nodes with a name are parameters; backward() reports their gradients by name.
    """

    __slots__ = ("value", "grad", "parents", "op_kind", "name", "_backward")

    def __init__(self, value: ArrayLike, parents: Tuple["Node", ...] = (),
                 op_kind: str = "leaf", backward: Optional[Callable] = None,
                 name: Optional[str] = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.parents = parents
        self.op_kind = op_kind
        self.name = name
        self._backward = backward

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def item(self) -> float:
        """Return the value of a single-element node as a Python float."""
        return float(self.value.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def accumulate(self, contribution):
        """Add a gradient contribution into this node's grad."""
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if isinstance(contribution, IndexedGrad):
            np.add.at(self.grad, contribution.rows, contribution.values)
        else:
            self.grad += contribution

    def __repr__(self) -> str:
        label = self.name or self.op_kind
        return f"Node({label}, shape={self.shape})"


def parameter(value: ArrayLike, name: str) -> Node:
    """Create a named leaf node whose gradient backward() reports."""
    node = Node(np.array(value, dtype=np.float64, copy=True), name=name)
    _check_finite("parameter", node.value)
    return node


def constant(value: ArrayLike) -> Node:
    """Create an unnamed leaf node (no gradient is reported for it)."""
    return Node(value)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Build values without backward closures inside the block."""
    global _GRAD_ENABLED
    previous = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = previous


def grad_enabled() -> bool:
    return _GRAD_ENABLED


# Global registry of available ops: kind -> forward rule returning (value, vjp)
_OPS_REGISTRY: Dict[str, Callable] = {}


def register_op(kind: str):
    """Register a forward rule for an op kind."""
    def decorator(rule: Callable) -> Callable:
        _OPS_REGISTRY[kind] = rule
        return rule
    return decorator


def list_ops() -> List[str]:
    """Get the list of all registered op kinds."""
    return sorted(_OPS_REGISTRY.keys())


def forward_op(kind: str, *inputs, **params) -> Node:
    """
    Apply a registered op to input nodes.

    Raw arrays are wrapped as constants. The result is checked for finiteness.
    """
    rule = _OPS_REGISTRY.get(kind)
    if rule is None:
        raise ContractError(f"unknown op kind: {kind}")

    nodes = tuple(x if isinstance(x, Node) else constant(x) for x in inputs)
    value, vjp = rule(*[n.value for n in nodes], **params)
    value = np.asarray(value, dtype=np.float64)
    _check_finite(kind, value)

    if not _GRAD_ENABLED:
        return Node(value, op_kind=kind)
    return Node(value, parents=nodes, op_kind=kind, backward=vjp)


def backward(root: Node) -> Dict[str, np.ndarray]:
    """
    Back-propagate from a scalar root.

    Returns the gradient of every named node reachable from root (zeros when
    the path to it carries no gradient). Unreached parameters are absent.
    """
    if root.value.size != 1:
        raise ContractError(f"backward requires a scalar root, got shape {root.shape}")

    order = _topological_order(root)
    root.grad = np.ones_like(root.value)

    for node in reversed(order):
        if node._backward is None or node.grad is None:
            continue
        contributions = node._backward(node.grad)
        for parent, contribution in zip(node.parents, contributions):
            if contribution is not None:
                parent.accumulate(contribution)

    grads = {}
    for node in order:
        if node.name is not None:
            grads[node.name] = node.grad if node.grad is not None else np.zeros_like(node.value)
    return grads


def zero_grads(nodes: Iterable[Node]):
    """Reset gradients so a graph (or its parameters) can be reused."""
    for node in nodes:
        node.zero_grad()


def _topological_order(root: Node) -> List[Node]:
    """Iterative post-order DFS: parents always precede their children."""
    order: List[Node] = []
    visited = set()
    stack: List[Tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def _check_finite(kind: str, value: np.ndarray):
    if not np.all(np.isfinite(value)):
        raise NumericalError(kind)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the input's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(kind: str, a: np.ndarray, b: np.ndarray) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(kind, [a.shape, b.shape]) from None


# ---------------------------------------------------------------------------
# Op rules
# ---------------------------------------------------------------------------

@register_op("matmul")
def _matmul(a: np.ndarray, b: np.ndarray):
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError("matmul", [a.shape, b.shape])

    def vjp(g):
        return g @ b.T, a.T @ g
    return a @ b, vjp


@register_op("add")
def _add(a: np.ndarray, b: np.ndarray):
    _broadcast_shape("add", a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)
    return a + b, vjp


@register_op("sub")
def _sub(a: np.ndarray, b: np.ndarray):
    _broadcast_shape("sub", a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)
    return a - b, vjp


@register_op("mul")
def _mul(a: np.ndarray, b: np.ndarray):
    _broadcast_shape("mul", a, b)

    def vjp(g):
        return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)
    return a * b, vjp


@register_op("concat")
def _concat(*arrays: np.ndarray, axis: int = -1):
    shapes = [x.shape for x in arrays]
    if not arrays or any(x.ndim != arrays[0].ndim for x in arrays):
        raise DimensionError("concat", shapes)
    axis = axis % arrays[0].ndim
    for x in arrays[1:]:
        if any(x.shape[d] != arrays[0].shape[d] for d in range(x.ndim) if d != axis):
            raise DimensionError("concat", shapes, f"mismatch off axis {axis}")
    boundaries = np.cumsum([x.shape[axis] for x in arrays])[:-1]

    def vjp(g):
        return tuple(np.split(g, boundaries, axis=axis))
    return np.concatenate(arrays, axis=axis), vjp


@register_op("slice")
def _slice(x: np.ndarray, start: int, stop: int, axis: int = -1):
    axis = axis % x.ndim
    if not 0 <= start < stop <= x.shape[axis]:
        raise DimensionError("slice", [x.shape], f"range [{start}, {stop}) on axis {axis}")
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def vjp(g):
        full = np.zeros_like(x)
        full[index] = g
        return (full,)
    return x[index], vjp


@register_op("index")
def _index(x: np.ndarray, position):
    try:
        value = x[position]
    except IndexError:
        raise DimensionError("index", [x.shape], f"position {position}") from None

    def vjp(g):
        full = np.zeros_like(x)
        full[position] = g
        return (full,)
    return np.asarray(value), vjp


@register_op("tanh")
def _tanh(x: np.ndarray):
    y = np.tanh(x)

    def vjp(g):
        return (g * (1.0 - y * y),)
    return y, vjp


@register_op("sigmoid")
def _sigmoid(x: np.ndarray):
    y = 0.5 * (1.0 + np.tanh(0.5 * x))

    def vjp(g):
        return (g * y * (1.0 - y),)
    return y, vjp


@register_op("softmax")
def _softmax(x: np.ndarray, mask: Optional[np.ndarray] = None):
    """Softmax over the last axis. Masked (True) entries get probability exactly 0."""
    if mask is None:
        shifted = np.exp(x - x.max(axis=-1, keepdims=True))
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != x.shape[-1:]:
            raise DimensionError("softmax", [x.shape, mask.shape], "mask must match the last axis")
        allowed = ~mask
        if not allowed.any():
            raise ContractError("softmax: mask covers every entry")
        peak = np.where(allowed, x, -np.inf).max(axis=-1, keepdims=True)
        shifted = np.where(allowed, np.exp(np.where(allowed, x, peak) - peak), 0.0)
    y = shifted / shifted.sum(axis=-1, keepdims=True)

    def vjp(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)
    return y, vjp


@register_op("log")
def _log(x: np.ndarray):
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.log(x)

    def vjp(g):
        return (g / x,)
    return y, vjp


@register_op("embedding_gather")
def _embedding_gather(table: np.ndarray, ids):
    ids = np.asarray(ids, dtype=np.int64).reshape(-1)
    if table.ndim != 2:
        raise DimensionError("embedding_gather", [table.shape], "table must be 2-D")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DimensionError("embedding_gather", [table.shape, ids.shape], "id out of range")

    def vjp(g):
        return (IndexedGrad(ids, g),)
    return table[ids], vjp


@register_op("sum")
def _sum(x: np.ndarray):
    def vjp(g):
        return (np.broadcast_to(g, x.shape).copy(),)
    return x.sum(), vjp


@register_op("mean")
def _mean(x: np.ndarray):
    if x.size == 0:
        raise DimensionError("mean", [x.shape], "empty input")

    def vjp(g):
        return (np.full_like(x, float(g) / x.size),)
    return x.mean(), vjp


@register_op("scale")
def _scale(x: np.ndarray, factor: float):
    factor = float(factor)

    def vjp(g):
        return (g * factor,)
    return x * factor, vjp


@register_op("stack")
def _stack(*scalars: np.ndarray):
    """Stack scalar nodes into a 1-D vector."""
    if not scalars or any(s.size != 1 for s in scalars):
        raise DimensionError("stack", [s.shape for s in scalars], "inputs must be scalars")

    def vjp(g):
        return tuple(g[i].reshape(s.shape) for i, s in enumerate(scalars))
    return np.array([float(s.reshape(-1)[0]) for s in scalars]), vjp


# ---------------------------------------------------------------------------
# Convenience wrappers
# ---------------------------------------------------------------------------

def matmul(a, b) -> Node:
    return forward_op("matmul", a, b)


def add(a, b) -> Node:
    return forward_op("add", a, b)


def sub(a, b) -> Node:
    return forward_op("sub", a, b)


def mul(a, b) -> Node:
    return forward_op("mul", a, b)


def concat(nodes: Sequence, axis: int = -1) -> Node:
    return forward_op("concat", *nodes, axis=axis)


def slice_(x, start: int, stop: int, axis: int = -1) -> Node:
    return forward_op("slice", x, start=start, stop=stop, axis=axis)


def index(x, position) -> Node:
    return forward_op("index", x, position=position)


def tanh(x) -> Node:
    return forward_op("tanh", x)


def sigmoid(x) -> Node:
    return forward_op("sigmoid", x)


def softmax(x, mask: Optional[np.ndarray] = None) -> Node:
    return forward_op("softmax", x, mask=mask)


def log(x) -> Node:
    return forward_op("log", x)


def embedding_gather(table, ids) -> Node:
    return forward_op("embedding_gather", table, ids=ids)


def sum_(x) -> Node:
    return forward_op("sum", x)


def mean(x) -> Node:
    return forward_op("mean", x)


def scale(x, factor: float) -> Node:
    return forward_op("scale", x, factor=factor)


def stack(scalars: Sequence[Node]) -> Node:
    return forward_op("stack", *scalars)


def total(scalars: Sequence[Node]) -> Node:
    """Sum a list of scalar nodes."""
    return sum_(stack(scalars))


def average(scalars: Sequence[Node]) -> Node:
    """Mean of a list of scalar nodes."""
    return mean(stack(scalars))
