"""Tape-based reverse-mode differentiation over float64 numpy arrays.

Operations executed inside a ``with Graph() as g:`` block are recorded as
nodes in creation order (which is a topological order). The tape can be
differentiated with :func:`backward` and re-evaluated on new leaf values with
:func:`forward`, which is what the finite-difference checker relies on.
Outside a graph, operations run eagerly and nothing is recorded.
"""

from __future__ import annotations

import threading
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

Array = np.ndarray


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "node", "name", "requires_grad", "__weakref__")

    # numpy should defer to our reflected operators
    __array_priority__ = 1000

    def __init__(self, data, name: Optional[str] = None, requires_grad: bool = False, node=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[Array] = None
        self.node = node
        self.name = name
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def is_leaf(self) -> bool:
        return self.node is None

    def numpy(self) -> Array:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape})"

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

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, index):
        return take(self, index)

    def sum(self, axis=None, keepdims=False):
        return reduce_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return reduce_mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)


def param(data, name: str) -> Tensor:
    """A trainable leaf."""
    return Tensor(np.array(data, dtype=np.float64), name=name, requires_grad=True)


def constant(data) -> Tensor:
    return data if isinstance(data, Tensor) else Tensor(data)


class Node:
    __slots__ = ("prim", "inputs", "attrs", "out", "index")

    def __init__(self, prim, inputs, attrs, index):
        self.prim = prim
        self.inputs = inputs
        self.attrs = attrs
        self.index = index
        self.out: Optional[Tensor] = None

    def describe(self) -> str:
        return f"node #{self.index} ({self.prim.name})"


_state = threading.local()


def active_graph() -> Optional["Graph"]:
    stack = getattr(_state, "stack", None)
    return stack[-1] if stack else None


class Graph:
    """A recorded computation: nodes in topological order plus named leaves."""

    def __init__(self, check_finite: bool = True):
        self.nodes: list[Node] = []
        self.inputs: dict[str, Tensor] = {}
        self.outputs: dict[str, Tensor] = {}
        self.check_finite = check_finite

    def __enter__(self) -> "Graph":
        if not hasattr(_state, "stack"):
            _state.stack = []
        _state.stack.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _state.stack.pop()

    def input(self, name: str, data) -> Tensor:
        t = Tensor(data, name=name)
        self.inputs[name] = t
        return t

    def output(self, name: str, t: Tensor) -> Tensor:
        self.outputs[name] = t
        return t

    @property
    def parameters(self) -> list[Tensor]:
        """Trainable leaves reached by this graph, in order of first use."""
        seen: dict[int, Tensor] = {}
        for node in self.nodes:
            for t in node.inputs:
                if t.requires_grad and t.node is None and id(t) not in seen:
                    seen[id(t)] = t
        return list(seen.values())

    def __len__(self) -> int:
        return len(self.nodes)


# ---------------------------------------------------------------------------
# primitives


class Primitive:
    """A differentiable operation: ``forward(*arrays, **attrs)`` and a vector-Jacobian product."""

    def __init__(self, name: str, fwd: Callable[..., Array], vjp: Callable[..., list]):
        self.name = name
        self.fwd = fwd
        self.vjp = vjp

    def __call__(self, *inputs, **attrs) -> Tensor:
        ins = tuple(constant(x) for x in inputs)
        g = active_graph()
        try:
            out = self.fwd(*[t.data for t in ins], **attrs)
        except ValueError as e:
            where = f"node #{len(g.nodes)} " if g is not None else ""
            raise ShapeError(f"{where}({self.name}): {e}") from None
        needs = any(t.requires_grad for t in ins)
        if g is None:
            return Tensor(out)
        node = Node(self, ins, attrs, len(g.nodes))
        if g.check_finite and not np.isfinite(out).all():
            raise NonFiniteError(f"non-finite output at {node.describe()}")
        t = Tensor(out, requires_grad=needs, node=node)
        node.out = t
        g.nodes.append(node)
        return t


class IndexGrad:
    """Gradient of an indexing op, scattered into the parent buffer lazily."""

    __slots__ = ("index", "value", "advanced")

    def __init__(self, index, value, advanced):
        self.index = index
        self.value = value
        self.advanced = advanced

    def add_into(self, buf: Array) -> None:
        if self.advanced:
            np.add.at(buf, self.index, self.value)
        else:
            buf[self.index] += self.value


def _unbroadcast(g: Array, shape: tuple[int, ...]) -> Array:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _swap(a: Array) -> Array:
    return np.swapaxes(a, -1, -2)


def _matmul_fwd(a, b):
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul needs >=2-d operands, got {a.shape} and {b.shape}")
    return np.matmul(a, b)


def _matmul_vjp(g, node):
    a, b = (t.data for t in node.inputs)
    return [_unbroadcast(g @ _swap(b), a.shape), _unbroadcast(_swap(a) @ g, b.shape)]


def _add_fwd(a, b):
    return a + b


def _add_vjp(g, node):
    a, b = node.inputs
    return [_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)]


def _sub_vjp(g, node):
    a, b = node.inputs
    return [_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)]


def _mul_vjp(g, node):
    a, b = (t.data for t in node.inputs)
    return [_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)]


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softplus(x):
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def _softmax(x, axis=-1):
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def _log_softmax(x, axis=-1):
    s = x - x.max(axis=axis, keepdims=True)
    return s - np.log(np.exp(s).sum(axis=axis, keepdims=True))


def _softmax_vjp(g, node):
    y = node.out.data
    axis = node.attrs.get("axis", -1)
    return [y * (g - (g * y).sum(axis=axis, keepdims=True))]


def _log_softmax_vjp(g, node):
    y = np.exp(node.out.data)
    axis = node.attrs.get("axis", -1)
    return [g - y * g.sum(axis=axis, keepdims=True)]


def _concat_vjp(g, node):
    axis = node.attrs["axis"]
    sizes = [t.shape[axis] for t in node.inputs]
    return np.split(g, np.cumsum(sizes)[:-1], axis=axis)


def _stack_vjp(g, node):
    axis = node.attrs["axis"]
    return [np.take(g, i, axis=axis) for i in range(len(node.inputs))]


def _is_advanced(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return any(isinstance(i, (list, np.ndarray)) for i in items)


def _take_vjp(g, node):
    index = node.attrs["index"]
    return [IndexGrad(index, g, _is_advanced(index))]


def _reduce_sum_vjp(g, node):
    (x,) = node.inputs
    axis, keepdims = node.attrs["axis"], node.attrs["keepdims"]
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return [np.broadcast_to(g, x.shape)]


def _reduce_mean_vjp(g, node):
    (x,) = node.inputs
    count = x.data.size / node.out.data.size
    return [_reduce_sum_vjp(g, node)[0] / count]


def _transpose_vjp(g, node):
    axes = node.attrs["axes"]
    if axes is None:
        return [np.transpose(g)]
    return [np.transpose(g, np.argsort(axes))]


_matmul = Primitive("matmul", _matmul_fwd, _matmul_vjp)
_add = Primitive("add", _add_fwd, _add_vjp)
_sub = Primitive("sub", lambda a, b: a - b, _sub_vjp)
_mul = Primitive("mul", lambda a, b: a * b, _mul_vjp)
_neg = Primitive("neg", lambda a: -a, lambda g, node: [-g])
_tanh = Primitive("tanh", np.tanh, lambda g, node: [g * (1.0 - node.out.data**2)])
_sigmoid_p = Primitive(
    "sigmoid", _sigmoid, lambda g, node: [g * node.out.data * (1.0 - node.out.data)]
)
_exp = Primitive("exp", np.exp, lambda g, node: [g * node.out.data])
_log = Primitive("log", np.log, lambda g, node: [g / node.inputs[0].data])
_softplus_p = Primitive("softplus", _softplus, lambda g, node: [g * _sigmoid(node.inputs[0].data)])
_softmax_p = Primitive("softmax", _softmax, _softmax_vjp)
_log_softmax_p = Primitive("log_softmax", _log_softmax, _log_softmax_vjp)
_concat = Primitive("concat", lambda *xs, axis: np.concatenate(xs, axis=axis), _concat_vjp)
_stack = Primitive("stack", lambda *xs, axis: np.stack(xs, axis=axis), _stack_vjp)
_take = Primitive("take", lambda x, index: x[index], _take_vjp)
_masked_fill = Primitive(
    "masked_fill",
    lambda x, mask, value: np.where(mask, value, x),
    lambda g, node: [np.where(node.attrs["mask"], 0.0, g)],
)
_reduce_sum = Primitive(
    "reduce_sum", lambda x, axis, keepdims: np.sum(x, axis=axis, keepdims=keepdims), _reduce_sum_vjp
)
_reduce_mean = Primitive(
    "reduce_mean",
    lambda x, axis, keepdims: np.mean(x, axis=axis, keepdims=keepdims),
    _reduce_mean_vjp,
)
_reshape = Primitive(
    "reshape", lambda x, shape: np.reshape(x, shape), lambda g, node: [g.reshape(node.inputs[0].shape)]
)
_transpose = Primitive("transpose", lambda x, axes: np.transpose(x, axes), _transpose_vjp)


def matmul(a, b) -> Tensor:
    return _matmul(a, b)


def add(a, b) -> Tensor:
    return _add(a, b)


def sub(a, b) -> Tensor:
    return _sub(a, b)


def mul(a, b) -> Tensor:
    return _mul(a, b)


def neg(a) -> Tensor:
    return _neg(a)


def tanh(x) -> Tensor:
    return _tanh(x)


def sigmoid(x) -> Tensor:
    return _sigmoid_p(x)


def exp(x) -> Tensor:
    return _exp(x)


def log(x) -> Tensor:
    return _log(x)


def softplus(x) -> Tensor:
    """``log(1 + exp(x))`` computed without overflow."""
    return _softplus_p(x)


def softmax(x, axis: int = -1) -> Tensor:
    return _softmax_p(x, axis=axis)


def log_softmax(x, axis: int = -1) -> Tensor:
    return _log_softmax_p(x, axis=axis)


def concat(xs: Sequence, axis: int = -1) -> Tensor:
    return _concat(*xs, axis=axis)


def stack(xs: Sequence, axis: int = 0) -> Tensor:
    return _stack(*xs, axis=axis)


def take(x, index) -> Tensor:
    """``x[index]`` for basic or integer-array indices."""
    if isinstance(index, list):
        index = np.asarray(index)
    return _take(x, index=index)


def masked_fill(x, mask, value: float) -> Tensor:
    return _masked_fill(x, mask=np.asarray(mask, dtype=bool), value=float(value))


def reduce_sum(x, axis=None, keepdims: bool = False) -> Tensor:
    return _reduce_sum(x, axis=axis, keepdims=keepdims)


def reduce_mean(x, axis=None, keepdims: bool = False) -> Tensor:
    return _reduce_mean(x, axis=axis, keepdims=keepdims)


def reshape(x, shape) -> Tensor:
    return _reshape(x, shape=tuple(shape))


def transpose(x, axes=None) -> Tensor:
    return _transpose(x, axes=None if axes is None else tuple(axes))


# ---------------------------------------------------------------------------
# evaluation


def forward(g: Graph, inputs: Optional[Mapping[str, Any]] = None) -> dict[str, Array]:
    """Re-evaluate the recorded tape, optionally replacing named input values first."""
    for name, value in (inputs or {}).items():
        if name not in g.inputs:
            raise KeyError(f"graph has no input named {name!r}")
        leaf = g.inputs[name]
        value = np.asarray(value, dtype=np.float64)
        if value.shape != leaf.shape:
            raise ShapeError(f"input {name!r}: expected shape {leaf.shape}, got {value.shape}")
        leaf.data = value
    for node in g.nodes:
        try:
            out = node.prim.fwd(*[t.data for t in node.inputs], **node.attrs)
        except ValueError as e:
            raise ShapeError(f"{node.describe()}: {e}") from None
        if g.check_finite and not np.isfinite(out).all():
            raise NonFiniteError(f"non-finite output at {node.describe()}")
        node.out.data = out
    return {name: t.data for name, t in g.outputs.items()}


def backward(g: Graph, loss: Tensor) -> dict[str, Array]:
    """Accumulate d(loss)/d(param) into ``param.grad`` for every trainable leaf.

    Returns the gradients keyed by parameter name.
    """
    if loss.data.size != 1:
        raise ShapeError(f"loss must be a scalar, got shape {loss.shape}")
    grads: dict[int, Array] = {id(loss): np.ones_like(loss.data)}
    owned: set[int] = set()
    stop = loss.node.index if loss.node is not None else -1
    for node in reversed(g.nodes[: stop + 1]):
        key = id(node.out)
        gout = grads.pop(key, None)
        owned.discard(key)
        if gout is None:
            continue
        parts = node.prim.vjp(gout, node)
        for t, gi in zip(node.inputs, parts):
            if gi is None or not t.requires_grad:
                continue
            _accumulate(grads, owned, t, gi)
    result = {}
    for t in g.parameters:
        gi = grads.get(id(t))
        if gi is None:
            continue
        t.grad = np.array(gi) if t.grad is None else t.grad + gi
        if t.name is not None:
            result[t.name] = t.grad
    return result


def _accumulate(grads: dict[int, Array], owned: set[int], t: Tensor, gi) -> None:
    key = id(t)
    buf = grads.get(key)
    if isinstance(gi, IndexGrad):
        if buf is None or key not in owned:
            fresh = np.zeros(t.shape)
            if buf is not None:
                fresh += buf
            buf = grads[key] = fresh
            owned.add(key)
        gi.add_into(buf)
    elif buf is None:
        grads[key] = gi
    elif key in owned:
        buf += gi
    else:
        grads[key] = buf + gi
        owned.add(key)


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None
