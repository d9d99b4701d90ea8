"""
Minimal reverse-mode differentiation on numpy arrays.

Every operation returns a new :class:`Tensor` that remembers its parents and
a closure pushing the output gradient back to them. ``backward`` walks the
graph in reverse topological order, so each node's closure runs once after
all of its consumers have contributed.
"""

from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from volume.errors import ShapeMismatch

ArrayLike = Union[np.ndarray, float, int]


def _unbroadcast(gradient: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``gradient`` down to ``shape`` after numpy broadcasting."""
    while gradient.ndim > len(shape):
        gradient = gradient.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and gradient.shape[axis] != 1:
            gradient = gradient.sum(axis=axis, keepdims=True)
    return gradient


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: str = "",
                 parents: Sequence["Tensor"] = (), dtype=None):
        array = np.asarray(data, dtype=dtype)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        self.data = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.name = name
        self._parents = tuple(parents)
        self._backward: Optional[Callable[[np.ndarray], None]] = None

    # -- bookkeeping ---------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, gradient: np.ndarray) -> None:
        if not self.requires_grad:
            return
        gradient = np.asarray(gradient, dtype=self.data.dtype)
        if gradient.shape != self.data.shape:
            raise ShapeMismatch(f"gradient shape {gradient.shape} != value shape {self.data.shape} ({self.name})")
        self.grad = gradient.copy() if self.grad is None else self.grad + gradient

    def backward(self, gradient: Optional[np.ndarray] = None) -> None:
        if gradient is None:
            if self.data.size != 1:
                raise ShapeMismatch("backward without a gradient needs a scalar tensor")
            gradient = np.ones_like(self.data)
        order, seen = [], set()

        def visit(node: "Tensor") -> None:
            stack = [(node, False)]
            while stack:
                current, expanded = stack.pop()
                if expanded:
                    order.append(current)
                    continue
                if id(current) in seen:
                    continue
                seen.add(id(current))
                stack.append((current, True))
                for parent in current._parents:
                    if parent.requires_grad and id(parent) not in seen:
                        stack.append((parent, False))

        visit(self)
        self._accumulate(gradient)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
            if node._parents:
                # intermediate gradients are not needed after propagation
                node.grad = None if node is not self else node.grad

    def _result(self, data: np.ndarray, parents: Sequence["Tensor"],
                backward: Callable[[np.ndarray], None]) -> "Tensor":
        out = Tensor(data, parents=parents)
        if out.requires_grad:
            out._backward = backward
        return out

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: Union["Tensor", ArrayLike]) -> "Tensor":
        other = as_tensor(other, self.dtype)

        def backward(g):
            self._accumulate(_unbroadcast(g, self.shape))
            other._accumulate(_unbroadcast(g, other.shape))

        return self._result(self.data + other.data, (self, other), backward)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return self._result(-self.data, (self,), lambda g: self._accumulate(-g))

    def __sub__(self, other: Union["Tensor", ArrayLike]) -> "Tensor":
        return self + (-as_tensor(other, self.dtype))

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return as_tensor(other, self.dtype) + (-self)

    def __mul__(self, other: Union["Tensor", ArrayLike]) -> "Tensor":
        other = as_tensor(other, self.dtype)

        def backward(g):
            self._accumulate(_unbroadcast(g * other.data, self.shape))
            other._accumulate(_unbroadcast(g * self.data, other.shape))

        return self._result(self.data * other.data, (self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, other: Union["Tensor", ArrayLike]) -> "Tensor":
        other = as_tensor(other, self.dtype)

        def backward(g):
            self._accumulate(_unbroadcast(g / other.data, self.shape))
            other._accumulate(_unbroadcast(-g * self.data / (other.data * other.data), other.shape))

        return self._result(self.data / other.data, (self, other), backward)

    def __rtruediv__(self, other: ArrayLike) -> "Tensor":
        return as_tensor(other, self.dtype) / self

    def __pow__(self, exponent: float) -> "Tensor":
        def backward(g):
            self._accumulate(g * exponent * self.data ** (exponent - 1))

        return self._result(self.data ** exponent, (self,), backward)

    def matmul(self, other: "Tensor") -> "Tensor":
        if self.data.ndim != 2 or other.data.ndim != 2 or self.shape[1] != other.shape[0]:
            raise ShapeMismatch(f"matmul of {self.shape} and {other.shape}")

        def backward(g):
            self._accumulate(g @ other.data.T)
            other._accumulate(self.data.T @ g)

        return self._result(self.data @ other.data, (self, other), backward)

    __matmul__ = matmul

    # -- reductions and reshaping -------------------------------------------

    def sum(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        shape = self.shape

        def backward(g):
            if axis is not None and not keepdims:
                axes = (axis,) if isinstance(axis, int) else axis
                for a in sorted(a % len(shape) for a in axes):
                    g = np.expand_dims(g, a)
            self._accumulate(np.broadcast_to(g, shape))

        return self._result(np.sum(self.data, axis=axis, keepdims=keepdims), (self,), backward)

    def mean(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.data.size
        else:
            axes = (axis,) if isinstance(axis, int) else axis
            count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis, keepdims) * (1.0 / count)

    def reshape(self, *shape) -> "Tensor":
        original = self.shape
        return self._result(self.data.reshape(*shape), (self,), lambda g: self._accumulate(g.reshape(original)))

    def __getitem__(self, index) -> "Tensor":
        def backward(g):
            full = np.zeros_like(self.data)
            np.add.at(full, index, g)
            self._accumulate(full)

        return self._result(self.data[index], (self,), backward)

    # -- elementwise nonlinearities -----------------------------------------

    def exp(self) -> "Tensor":
        value = np.exp(self.data)
        return self._result(value, (self,), lambda g: self._accumulate(g * value))

    def log(self) -> "Tensor":
        return self._result(np.log(self.data), (self,), lambda g: self._accumulate(g / self.data))

    def sigmoid(self) -> "Tensor":
        # split by sign so large |x| never overflows exp
        x = self.data
        value = np.empty_like(x)
        positive = x >= 0
        value[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
        e = np.exp(x[~positive])
        value[~positive] = e / (1.0 + e)
        return self._result(value, (self,), lambda g: self._accumulate(g * value * (1.0 - value)))

    def relu(self) -> "Tensor":
        mask = self.data > 0
        return self._result(self.data * mask, (self,), lambda g: self._accumulate(g * mask))

    def leaky_relu(self, slope: float = 0.01) -> "Tensor":
        factor = np.where(self.data > 0, 1.0, slope).astype(self.dtype)
        return self._result(self.data * factor, (self,), lambda g: self._accumulate(g * factor))

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label}, requires_grad={self.requires_grad})"


def as_tensor(value: Union[Tensor, ArrayLike], dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype))


def parameter(data: np.ndarray, name: str) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def concat(tensors: Iterable[Tensor], axis: int = 1) -> Tensor:
    tensors = list(tensors)
    sizes = [t.shape[axis] for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)

    def backward(g):
        start = 0
        for tensor, size in zip(tensors, sizes):
            index = [slice(None)] * g.ndim
            index[axis] = slice(start, start + size)
            tensor._accumulate(g[tuple(index)])
            start += size

    out = Tensor(data, parents=tensors)
    if out.requires_grad:
        out._backward = backward
    return out
