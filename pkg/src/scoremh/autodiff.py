"""Reverse-mode automatic differentiation on dense float64 arrays.

A `Tensor` wraps an ndarray and remembers the operation that produced it, so a
single backward pass over the recorded graph yields gradients with respect to
every leaf marked `requires_grad`. Activation derivatives (`sigmoid` for
softplus', `gelu_prime` for GELU') are first-class operations, which lets
network input-gradients be written out as ordinary graph nodes and then
differentiated again with respect to parameters in the same backward pass.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.special import erf as _np_erf, expit as _np_sigmoid

from .errors import DimensionError

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_TWO_OVER_SQRT_PI = 2.0 / np.sqrt(np.pi)


def _phi(x: np.ndarray) -> np.ndarray:
    """Standard normal pdf."""
    return np.exp(-0.5 * x * x) * _INV_SQRT_2PI


def _Phi(x: np.ndarray) -> np.ndarray:
    """Standard normal cdf via erf."""
    return 0.5 * (1.0 + _np_erf(x / _SQRT2))


class Tensor:
    """Node of the computation graph; holds a float64 ndarray value."""

    __slots__ = ("value", "grad", "op", "parents", "_backward", "requires_grad")

    def __init__(
        self,
        value,
        op: str = "leaf",
        parents: Sequence["Tensor"] = (),
        backward: Optional[Callable[[], None]] = None,
        requires_grad: bool = False,
    ):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.op = op
        self.parents = tuple(parents)
        self._backward = backward
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.value.shape})"

    def _accum(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad = self.grad + g

    # operator sugar -------------------------------------------------------

    def __add__(self, other):
        return add(self, as_tensor(other))

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, as_tensor(other))

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, as_tensor(other))

    def __rmul__(self, other):
        return mul(as_tensor(other), self)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("tensor/tensor division is not a graph primitive")
        return mul(self, as_tensor(1.0 / other))

    def __neg__(self):
        return mul(self, as_tensor(-1.0))

    def __matmul__(self, other):
        return matmul(self, as_tensor(other))

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def item(self) -> float:
        return float(self.value)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(x) -> Tensor:
    return Tensor(np.asarray(x, dtype=np.float64))


def parameter(x) -> Tensor:
    """Leaf tensor that receives gradients."""
    return Tensor(np.array(x, dtype=np.float64), requires_grad=True)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a gradient back to `shape` after numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _node(value, op, parents) -> Tensor:
    return Tensor(value, op=op, parents=parents)


# primitive operations -----------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    out = _node(a.value + b.value, "add", (a, b))

    def bw():
        if a.requires_grad:
            a._accum(_unbroadcast(out.grad, a.value.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(out.grad, b.value.shape))

    out._backward = bw
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_val = a.value - b.value
    out = _node(out_val, "sub", (a, b))

    def bw():
        if a.requires_grad:
            a._accum(_unbroadcast(out.grad, a.value.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(-out.grad, b.value.shape))

    out._backward = bw
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_val = a.value * b.value
    out = _node(out_val, "mul", (a, b))

    def bw():
        if a.requires_grad:
            a._accum(_unbroadcast(out.grad * b.value, a.value.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(out.grad * a.value, b.value.shape))

    out._backward = bw
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise DimensionError(
            f"matmul expects 2-d operands, got {a.value.shape} @ {b.value.shape}"
        )
    if a.value.shape[1] != b.value.shape[0]:
        raise DimensionError(
            f"matmul inner dimensions differ: {a.value.shape} @ {b.value.shape}"
        )
    out = _node(a.value @ b.value, "matmul", (a, b))

    def bw():
        if a.requires_grad:
            a._accum(out.grad @ b.value.T)
        if b.requires_grad:
            b._accum(a.value.T @ out.grad)

    out._backward = bw
    return out


def tsum(a: Tensor, axis=None, keepdims=False) -> Tensor:
    out = _node(a.value.sum(axis=axis, keepdims=keepdims), "sum", (a,))

    def bw():
        g = out.grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accum(np.broadcast_to(g, a.value.shape).copy())

    out._backward = bw
    return out


def tmean(a: Tensor, axis=None, keepdims=False) -> Tensor:
    n = a.value.size if axis is None else a.value.shape[axis]
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / n)


def square(a: Tensor) -> Tensor:
    out = _node(a.value * a.value, "square", (a,))
    out._backward = lambda: a._accum(2.0 * a.value * out.grad)
    return out


def exp(a: Tensor) -> Tensor:
    out = _node(np.exp(a.value), "exp", (a,))
    out._backward = lambda: a._accum(out.value * out.grad)
    return out


def log(a: Tensor) -> Tensor:
    out = _node(np.log(a.value), "log", (a,))
    out._backward = lambda: a._accum(out.grad / a.value)
    return out


def erf(a: Tensor) -> Tensor:
    out = _node(_np_erf(a.value), "erf", (a,))
    out._backward = lambda: a._accum(
        out.grad * _TWO_OVER_SQRT_PI * np.exp(-a.value * a.value)
    )
    return out


def softplus(a: Tensor) -> Tensor:
    out = _node(np.logaddexp(0.0, a.value), "softplus", (a,))
    out._backward = lambda: a._accum(out.grad * _np_sigmoid(a.value))
    return out


def sigmoid(a: Tensor) -> Tensor:
    s = _np_sigmoid(a.value)
    out = _node(s, "sigmoid", (a,))
    out._backward = lambda: a._accum(out.grad * s * (1.0 - s))
    return out


def logsigmoid(a: Tensor) -> Tensor:
    out = _node(-np.logaddexp(0.0, -a.value), "logsigmoid", (a,))
    out._backward = lambda: a._accum(out.grad * _np_sigmoid(-a.value))
    return out


def gelu(a: Tensor) -> Tensor:
    """GELU in the exact erf form, x * Phi(x)."""
    x = a.value
    out = _node(x * _Phi(x), "gelu", (a,))
    out._backward = lambda: a._accum(out.grad * (_Phi(x) + x * _phi(x)))
    return out


def gelu_prime(a: Tensor) -> Tensor:
    """Derivative of GELU as a graph node, so input-gradient sweeps stay differentiable."""
    x = a.value
    out = _node(_Phi(x) + x * _phi(x), "gelu_prime", (a,))
    out._backward = lambda: a._accum(out.grad * _phi(x) * (2.0 - x * x))
    return out


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Element-wise clamp; gradient passes through inside [lo, hi] (inclusive)."""
    mask = (a.value >= lo) & (a.value <= hi)
    out = _node(np.clip(a.value, lo, hi), "clip", (a,))
    out._backward = lambda: a._accum(out.grad * mask)
    return out


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    vals = [t.value for t in tensors]
    out = _node(np.concatenate(vals, axis=axis), "concat", tuple(tensors))
    sizes = [v.shape[axis] for v in vals]
    offsets = np.cumsum([0] + sizes)

    def bw():
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * out.grad.ndim
                idx[axis] = slice(lo, hi)
                t._accum(out.grad[tuple(idx)])

    out._backward = bw
    return out


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    idx = [slice(None)] * a.value.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    out = _node(a.value[idx], "narrow", (a,))

    def bw():
        g = np.zeros_like(a.value)
        g[idx] = out.grad
        a._accum(g)

    out._backward = bw
    return out


# backward pass ------------------------------------------------------------


def topo_order(root: Tensor) -> list[Tensor]:
    """Parents-before-children ordering of the requires_grad subgraph."""
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))
    return order


def backward(root: Tensor, seed: Optional[np.ndarray] = None) -> None:
    """Accumulate gradients of `root` into every requires_grad leaf.

    Each node's backward rule fires exactly once, in reverse topological order.
    """
    if not root.requires_grad:
        raise ValueError("root does not depend on any parameter")
    if seed is None:
        if root.value.size != 1:
            raise ValueError("backward from a non-scalar needs an explicit seed")
        seed = np.ones_like(root.value)
    order = topo_order(root)
    root._accum(np.asarray(seed, dtype=np.float64))
    for node in reversed(order):
        if node._backward is not None:
            node._backward()


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None
