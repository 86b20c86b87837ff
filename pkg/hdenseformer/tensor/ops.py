"""
differentiable primitives

every op validates its operands, computes the forward value with numpy and
registers a backward rule that maps the output gradient to one gradient per parent
"""
import builtins
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erf

from ..exceptions import ShapeError
from .tensor import Tensor, as_tensor

__all__ = (
    'add', 'sub', 'mul', 'div', 'neg', 'pow', 'exp', 'log', 'relu', 'gelu', 'matmul', 'linear', 'reshape',
    'transpose', 'getitem', 'concat', 'split', 'sum', 'mean', 'max', 'softmax', 'layer_norm', 'instance_norm',
    'one_hot'
)

Axis = Union[None, int, Tuple[int, ...]]

_SQRT_HALF = np.sqrt(0.5)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """sums `grad` over the axes that broadcasting expanded, so it matches `shape` again"""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(op: str, a: Tensor, b: Tensor):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


def _normalize_axes(axis: Axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


# region elementwise
def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast('add', a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), backward, 'add')


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast('sub', a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), backward, 'sub')


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast('mul', a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), backward, 'mul')


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast('div', a, b)
    out = a.data / b.data

    def backward(g):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)

    return Tensor.from_op(out, (a, b), backward, 'div')


def neg(a) -> Tensor:
    a = as_tensor(a)
    return Tensor.from_op(-a.data, (a,), lambda g: (-g,), 'neg')


def pow(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    exponent = float(exponent)

    def backward(g):
        if exponent == 0.0:
            return np.zeros_like(a.data),
        # 0 ** (exponent - 1) diverges for exponent < 1, that point gets a zero subgradient
        with np.errstate(divide='ignore', invalid='ignore'):
            slope = exponent * a.data ** (exponent - 1.0)
        return g * np.where(np.isfinite(slope), slope, 0.0),

    return Tensor.from_op(a.data ** exponent, (a,), backward, 'pow')


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return Tensor.from_op(out, (a,), lambda g: (g * out,), 'exp')


def log(a, floor: Optional[float] = None) -> Tensor:
    """
    natural log, inputs below `floor` are clamped to it (the clamped entries get zero gradient)
    """
    a = as_tensor(a)
    x = a.data if floor is None else np.maximum(a.data, floor)

    def backward(g):
        grad = g / x
        if floor is not None:
            grad = np.where(a.data > floor, grad, 0.0).astype(a.dtype)
        return grad,

    return Tensor.from_op(np.log(x), (a,), backward, 'log')


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return Tensor.from_op(np.where(mask, a.data, 0.0).astype(a.dtype), (a,), lambda g: (g * mask,), 'relu')


def gelu(a) -> Tensor:
    """exact (erf based) GELU"""
    a = as_tensor(a)
    cdf = 0.5 * (1.0 + erf(a.data * _SQRT_HALF))

    def backward(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * a.data * a.data)
        return (g * (cdf + a.data * pdf)).astype(a.dtype),

    return Tensor.from_op((a.data * cdf).astype(a.dtype), (a,), backward, 'gelu')


# endregion

# region linear algebra
def matmul(a, b) -> Tensor:
    """batched matrix multiply over the last two axes, leading axes broadcast"""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError('matmul', a.shape, b.shape)
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise ShapeError('matmul', a.shape, b.shape) from None

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor.from_op(np.matmul(a.data, b.data), (a, b), backward, 'matmul')


def linear(x, weight, bias=None) -> Tensor:
    """dense map over the last axis: x @ weight.T + bias, weight is (out_features, in_features)"""
    x, weight = as_tensor(x), as_tensor(weight)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[1]:
        raise ShapeError('linear', x.shape, weight.shape)
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (weight.shape[0],):
            raise ShapeError('linear', weight.shape, bias.shape, hint='bias must match out_features')

    out = np.matmul(x.data, weight.data.T)
    if bias is not None:
        out = out + bias.data

    def backward(g):
        g2 = g.reshape(-1, weight.shape[0])
        x2 = x.data.reshape(-1, weight.shape[1])
        grads = [np.matmul(g, weight.data), np.matmul(g2.T, x2)]
        if bias is not None:
            grads.append(g2.sum(axis=0))
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward, 'linear')


# endregion

# region shape manipulation
def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    shape = tuple(int(s) for s in shape)
    if -1 in shape:
        known = int(np.prod([s for s in shape if s != -1]))
        if known == 0 or a.size % known:
            raise ShapeError('reshape', a.shape, shape)
        shape = tuple(a.size // known if s == -1 else s for s in shape)
    if int(np.prod(shape)) != a.size:
        raise ShapeError('reshape', a.shape, shape)
    return Tensor.from_op(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), 'reshape')


def transpose(a, axes: Optional[Sequence[int]] = None) -> Tensor:
    a = as_tensor(a)
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    if sorted(ax % a.ndim for ax in axes) != list(range(a.ndim)):
        raise ShapeError('transpose', a.shape, axes, hint='axes must be a permutation')
    inverse = tuple(np.argsort(axes))
    out = np.ascontiguousarray(np.transpose(a.data, axes))
    return Tensor.from_op(out, (a,), lambda g: (np.transpose(g, inverse),), 'transpose')


def getitem(a, index) -> Tensor:
    a = as_tensor(a)
    try:
        out = np.array(a.data[index])
    except IndexError:
        raise ShapeError('getitem', a.shape, hint=f'index {index!r} out of range') from None

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return full,

    return Tensor.from_op(out, (a,), backward, 'getitem')


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError('concat', hint='nothing to concatenate')
    ndim = tensors[0].ndim
    axis = axis % ndim
    reference = tensors[0].shape[:axis] + tensors[0].shape[axis + 1:]
    for t in tensors:
        if t.ndim != ndim or t.shape[:axis] + t.shape[axis + 1:] != reference:
            raise ShapeError('concat', *(t.shape for t in tensors))

    boundaries = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return np.split(g, boundaries, axis=axis)

    return Tensor.from_op(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward, 'concat')


def split(a, sizes: Sequence[int], axis: int = 0) -> List[Tensor]:
    """complement of concat: slices `a` into consecutive chunks of the given sizes"""
    a = as_tensor(a)
    axis = axis % a.ndim
    if builtins.sum(sizes) != a.shape[axis]:
        raise ShapeError('split', a.shape, tuple(sizes))
    out, start = [], 0
    for size in sizes:
        index = (slice(None),) * axis + (slice(start, start + size),)
        out.append(getitem(a, index))
        start += size
    return out


# endregion

# region reductions
def _expand_reduced(g: np.ndarray, axes: Tuple[int, ...], keepdims: bool, shape) -> np.ndarray:
    if not keepdims:
        g = np.expand_dims(g, axes)
    return np.broadcast_to(g, shape)


def sum(a, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        return np.array(_expand_reduced(g, axes, keepdims, a.shape)),

    return Tensor.from_op(out, (a,), backward, 'sum')


def mean(a, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes]))
    out = a.data.mean(axis=axes, keepdims=keepdims)

    def backward(g):
        return np.array(_expand_reduced(g, axes, keepdims, a.shape)) / count,

    return Tensor.from_op(out, (a,), backward, 'mean')


def max(a, axis: Axis = None, keepdims: bool = False) -> Tensor:
    """maximum, ties share the gradient equally"""
    a = as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    peak = a.data.max(axis=axes, keepdims=True)
    winners = (a.data == peak).astype(a.dtype)
    winners /= winners.sum(axis=axes, keepdims=True)

    def backward(g):
        return _expand_reduced(g, axes, keepdims, a.shape) * winners,

    out = peak if keepdims else np.squeeze(peak, axis=axes)
    return Tensor.from_op(out, (a,), backward, 'max')


# endregion

# region normalization
def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return out * (g - (g * out).sum(axis=axis, keepdims=True)),

    return Tensor.from_op(out, (a,), backward, 'softmax')


def _normalize_forward(x: np.ndarray, axes: Tuple[int, ...], eps: float):
    mu = x.mean(axis=axes, keepdims=True)
    centered = x - mu
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=axes, keepdims=True) + eps)
    return centered * inv_std, inv_std


def _normalize_backward(g_hat: np.ndarray, x_hat: np.ndarray, inv_std: np.ndarray, axes: Tuple[int, ...]):
    n = int(np.prod([x_hat.shape[ax] for ax in axes]))
    return inv_std / n * (n * g_hat
                          - g_hat.sum(axis=axes, keepdims=True)
                          - x_hat * (g_hat * x_hat).sum(axis=axes, keepdims=True))


def layer_norm(x, weight, bias, eps: float = 1e-5) -> Tensor:
    """normalizes over the last (feature) axis, then applies the per-feature affine map"""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    features = x.shape[-1]
    if weight.shape != (features,) or bias.shape != (features,):
        raise ShapeError('layer_norm', x.shape, weight.shape, bias.shape)

    axes = (x.ndim - 1,)
    x_hat, inv_std = _normalize_forward(x.data, axes, eps)
    out = x_hat * weight.data + bias.data

    def backward(g):
        leading = tuple(range(x.ndim - 1))
        gx = _normalize_backward(g * weight.data, x_hat, inv_std, axes)
        return gx, (g * x_hat).sum(axis=leading), g.sum(axis=leading)

    return Tensor.from_op(out, (x, weight, bias), backward, 'layer_norm')


def instance_norm(x, weight, bias, eps: float = 1e-5) -> Tensor:
    """per-sample, per-channel normalization over the spatial axes of a (N, C, *spatial) tensor"""
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if x.ndim < 3 or weight.shape != (x.shape[1],) or bias.shape != (x.shape[1],):
        raise ShapeError('instance_norm', x.shape, weight.shape, bias.shape)

    axes = tuple(range(2, x.ndim))
    affine_shape = (1, x.shape[1]) + (1,) * len(axes)
    w = weight.data.reshape(affine_shape)
    x_hat, inv_std = _normalize_forward(x.data, axes, eps)
    out = x_hat * w + bias.data.reshape(affine_shape)

    def backward(g):
        reduce_axes = (0,) + axes
        gx = _normalize_backward(g * w, x_hat, inv_std, axes)
        return gx, (g * x_hat).sum(axis=reduce_axes), g.sum(axis=reduce_axes)

    return Tensor.from_op(out, (x, weight, bias), backward, 'instance_norm')


# endregion

def one_hot(labels: np.ndarray, classes: int, axis: int = 1, dtype=None) -> Tensor:
    """constant one-hot encoding of an integer label array, the class axis inserted at `axis`"""
    labels = np.asarray(labels).astype(np.int64)
    encoded = np.moveaxis(np.eye(classes)[labels], -1, axis)
    return Tensor(encoded, dtype=dtype)
