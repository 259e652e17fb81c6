"""A minimal dense-tensor core with reverse-mode differentiation.

Tensors wrap numpy arrays (row-major, float32 or float64) and record the
operations that produced them; :meth:`Tensor.backward` walks the tape in
reverse topological order with a fixed traversal, so gradient accumulation
order, and therefore every bit of the result, is reproducible run to run.
"""

from __future__ import annotations

import numpy as np


class AutogradError(ValueError):
    """Base class for tensor-core failures."""


class ShapeMismatchError(AutogradError):
    """Operands have incompatible shapes."""


class DtypeMismatchError(AutogradError):
    """Operands mix float32 and float64."""


class GraphCycleError(AutogradError):
    """The recorded graph is not acyclic (defensive; should be impossible)."""


_ALLOWED_DTYPES = (np.float32, np.float64)


class Tensor:
    """A dense array with an optional gradient and a backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_grad_fn")

    def __init__(self, data, requires_grad: bool = False, dtype=None,
                 _parents=(), _grad_fn=None):
        if isinstance(data, Tensor):
            raise AutogradError("cannot wrap a Tensor in a Tensor")
        array = np.asarray(data, dtype=dtype)
        if array.dtype not in _ALLOWED_DTYPES:
            array = array.astype(np.float64)
        self.data = array
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = tuple(_parents)
        self._grad_fn = _grad_fn

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self) -> None:
        """Backpropagate from a scalar-valued tensor."""
        if self.data.size != 1:
            raise ShapeMismatchError(
                f"backward() requires a scalar, got shape {self.shape}"
            )
        topo: list[Tensor] = []
        state: dict[int, int] = {}  # id -> 0 in progress, 1 done
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                state[id(node)] = 1
                topo.append(node)
                continue
            mark = state.get(id(node))
            if mark == 1:
                continue
            if mark == 0:
                raise GraphCycleError("cycle detected in autograd graph")
            state[id(node)] = 0
            stack.append((node, True))
            for parent in node._parents:
                if state.get(id(parent)) != 1:
                    stack.append((parent, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._grad_fn is None or node.grad is None:
                continue
            for parent, grad in zip(node._parents, node._grad_fn(node.grad)):
                if parent.requires_grad or parent._parents:
                    parent._accumulate(grad.astype(parent.data.dtype, copy=False))

    # ----- operator plumbing -------------------------------------------------

    def _coerce(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            if other.dtype != self.dtype:
                raise DtypeMismatchError(
                    f"mixed dtypes {self.dtype} and {other.dtype}"
                )
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    def __add__(self, other):
        other = self._coerce(other)
        out = _result(np.add(self.data, other.data), (self, other))
        out._grad_fn = lambda g: (
            _unbroadcast(g, self.shape),
            _unbroadcast(g, other.shape),
        )
        return out

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        out = _result(np.subtract(self.data, other.data), (self, other))
        out._grad_fn = lambda g: (
            _unbroadcast(g, self.shape),
            _unbroadcast(-g, other.shape),
        )
        return out

    def __rsub__(self, other):
        return self._coerce(other).__sub__(self)

    def __neg__(self):
        out = _result(-self.data, (self,))
        out._grad_fn = lambda g: (-g,)
        return out

    def __mul__(self, other):
        other = self._coerce(other)
        out = _result(np.multiply(self.data, other.data), (self, other))
        out._grad_fn = lambda g: (
            _unbroadcast(g * other.data, self.shape),
            _unbroadcast(g * self.data, other.shape),
        )
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        out = _result(np.divide(self.data, other.data), (self, other))
        out._grad_fn = lambda g: (
            _unbroadcast(g / other.data, self.shape),
            _unbroadcast(-g * self.data / (other.data * other.data), other.shape),
        )
        return out

    def __rtruediv__(self, other):
        return self._coerce(other).__truediv__(self)

    def __matmul__(self, other):
        other = self._coerce(other)
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise ShapeMismatchError("matmul expects 2-D tensors")
        if self.shape[1] != other.shape[0]:
            raise ShapeMismatchError(
                f"matmul shapes {self.shape} and {other.shape} do not align"
            )
        out = _result(self.data @ other.data, (self, other))
        out._grad_fn = lambda g: (g @ other.data.T, self.data.T @ g)
        return out

    # ----- elementwise and reduction ops ------------------------------------

    def relu(self) -> "Tensor":
        mask = self.data > 0
        out = _result(np.where(mask, self.data, 0), (self,))
        out._grad_fn = lambda g: (g * mask,)
        return out

    def sqrt(self) -> "Tensor":
        root = np.sqrt(self.data)
        out = _result(root, (self,))
        out._grad_fn = lambda g: (g * 0.5 / root,)
        return out

    def sum(self) -> "Tensor":
        out = _result(np.asarray(self.data.sum(), dtype=self.dtype), (self,))
        out._grad_fn = lambda g: (np.broadcast_to(g, self.shape).copy(),)
        return out

    def mean_rows(self) -> "Tensor":
        """Mean over axis 0, keeping the row axis: (n, d) -> (1, d)."""
        if self.data.ndim != 2:
            raise ShapeMismatchError("mean_rows expects a 2-D tensor")
        n = self.shape[0]
        out = _result(self.data.mean(axis=0, keepdims=True), (self,))
        out._grad_fn = lambda g: (np.broadcast_to(g / n, self.shape).copy(),)
        return out

    def take_rows(self, indices) -> "Tensor":
        if self.data.ndim != 2:
            raise ShapeMismatchError("take_rows expects a 2-D tensor")
        idx = np.asarray(indices, dtype=np.int64)
        out = _result(self.data[idx], (self,))

        def grad_fn(g):
            grad = np.zeros_like(self.data)
            np.add.at(grad, idx, g)
            return (grad,)

        out._grad_fn = grad_fn
        return out


def _result(data: np.ndarray, parents) -> Tensor:
    track = any(p.requires_grad or p._parents for p in parents)
    return Tensor(data, _parents=parents if track else ())


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def concat_columns(tensors) -> Tensor:
    """Concatenate 2-D tensors along axis 1."""
    tensors = list(tensors)
    if not tensors:
        raise ShapeMismatchError("concat of an empty tensor list")
    rows = tensors[0].shape[0]
    dtype = tensors[0].dtype
    for t in tensors:
        if t.data.ndim != 2 or t.shape[0] != rows:
            raise ShapeMismatchError("concat_columns expects 2-D tensors with equal rows")
        if t.dtype != dtype:
            raise DtypeMismatchError("concat_columns with mixed dtypes")
    out = _result(np.concatenate([t.data for t in tensors], axis=1), tuple(tensors))
    widths = [t.shape[1] for t in tensors]

    def grad_fn(g):
        grads = []
        start = 0
        for width in widths:
            grads.append(g[:, start : start + width])
            start += width
        return tuple(grads)

    out._grad_fn = grad_fn
    return out


def dot(a: Tensor, b: Tensor) -> Tensor:
    """Scalar product of two tensors of identical shape."""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"dot shapes {a.shape} and {b.shape} differ")
    return (a * b).sum()


def l2_norm(t: Tensor, eps: float = 1e-12) -> Tensor:
    """Euclidean norm, smoothed so the gradient exists at zero."""
    return (dot(t, t) + eps).sqrt()


def cosine_distance_loss(pred: Tensor, target: Tensor, eps: float = 1e-12) -> Tensor:
    """Differentiable ``1 - cos(pred, target)`` for nonnegative targets."""
    return 1.0 - dot(pred, target) / (l2_norm(pred, eps) * l2_norm(target, eps))
