from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import HDenseFormerError, NonFiniteError
from ..shared import get_dtype, is_grad_enabled

__all__ = ('Tensor', 'as_tensor', 'zeros', 'ones', 'zeros_like')

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """
    dense float array that can take part in the gradient tape

    leaf tensors (inputs and parameters) receive `.grad` after `backward()`,
    op results only keep the references needed to route gradients to their parents
    """

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data: np.ndarray = np.array(data, dtype=dtype or get_dtype())
        self.requires_grad: bool = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.op: str = 'leaf'
        self._parents: Tuple['Tensor', ...] = ()
        self._backward: Optional[BackwardFn] = None

    @classmethod
    def from_op(cls, data: np.ndarray, parents: Iterable['Tensor'], backward: BackwardFn, op: str) -> 'Tensor':
        """wraps the result of a primitive, records it on the tape when any parent requires grad"""
        data = np.asarray(data)
        if not np.all(np.isfinite(data)):
            raise NonFiniteError(op)

        parents = tuple(parents)
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.op = op
        out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        out._parents = parents if out.requires_grad else ()
        out._backward = backward if out.requires_grad else None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise HDenseFormerError(f'item() needs a single-element tensor, got shape {self.shape}')
        return float(self.data.reshape(-1)[0])

    def detach(self) -> 'Tensor':
        return Tensor(self.data, dtype=self.data.dtype)

    def zero_grad(self):
        self.grad = None

    def backward(self, grad: Optional[np.ndarray] = None):
        """
        reverse-mode sweep from this tensor, accumulating into `.grad` of every leaf that requires grad
        :param grad: seed gradient, defaults to ones (the usual case for a scalar loss)
        """
        if not self.requires_grad:
            raise HDenseFormerError('backward() called on a tensor that is not part of the gradient tape')

        seed = np.ones_like(self.data) if grad is None else np.asarray(grad, dtype=self.data.dtype)
        if seed.shape != self.shape:
            raise HDenseFormerError(f'seed gradient shape {seed.shape} does not match tensor shape {self.shape}')

        pending = {id(self): seed}
        for node in reversed(_topological_order(self)):
            g = pending.pop(id(node), None)
            if g is None:
                continue

            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue

            for parent, parent_grad in zip(node._parents, node._backward(g)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

    # region operators
    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(other, self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(other, self)

    def __mul__(self, other):
        return ops.mul(self, other)

    def __rmul__(self, other):
        return ops.mul(other, self)

    def __truediv__(self, other):
        return ops.div(self, other)

    def __rtruediv__(self, other):
        return ops.div(other, self)

    def __neg__(self):
        return ops.neg(self)

    def __pow__(self, exponent: float):
        return ops.pow(self, exponent)

    def __matmul__(self, other):
        return ops.matmul(self, other)

    def __getitem__(self, index):
        return ops.getitem(self, index)

    def reshape(self, *shape) -> 'Tensor':
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes) -> 'Tensor':
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes or None)

    def sum(self, axis=None, keepdims: bool = False) -> 'Tensor':
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> 'Tensor':
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def max(self, axis=None, keepdims: bool = False) -> 'Tensor':
        return ops.max(self, axis=axis, keepdims=keepdims)

    # endregion

    def __repr__(self):
        grad = ', requires_grad=True' if self.requires_grad else ''
        return f'<Tensor shape={self.shape} dtype={self.dtype} op={self.op!r}{grad}>'


def _topological_order(root: Tensor) -> List[Tensor]:
    """parents before children, restricted to nodes that require grad (iterative, graphs get deep)"""
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
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


def as_tensor(value) -> Tensor:
    """returns tensors unchanged, wraps anything else as a constant"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def zeros(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=requires_grad)


def ones(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=requires_grad)


def zeros_like(tensor: Tensor) -> Tensor:
    return Tensor(np.zeros_like(tensor.data), dtype=tensor.dtype)


from . import ops  # noqa: E402
