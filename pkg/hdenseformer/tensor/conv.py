"""
N-d convolution and transposed convolution on (N, C, *spatial) tensors

both are computed as a sum over kernel offsets: for each offset the strided
input window is contracted with the matching (C_out, C_in) kernel slice, which
keeps memory at one window at a time regardless of kernel size
"""
import itertools
from typing import Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import ShapeError
from .tensor import Tensor, as_tensor

__all__ = ('conv', 'conv_transpose', 'conv_output_shape', 'conv_transpose_output_shape')

IntOrTuple = Union[int, Sequence[int]]


def _as_tuple(value: IntOrTuple, n: int) -> Tuple[int, ...]:
    if isinstance(value, int):
        return (value,) * n
    value = tuple(int(v) for v in value)
    if len(value) != n:
        raise ShapeError('conv', value, hint=f'expected {n} values, one per spatial axis')
    return value


def _offsets(kernel: Tuple[int, ...]) -> Iterator[Tuple[int, ...]]:
    return itertools.product(*(range(k) for k in kernel))


def _window(offset: Tuple[int, ...], extents: Tuple[int, ...], stride: Tuple[int, ...]) -> tuple:
    """index selecting, for every spatial axis, `extents` positions starting at `offset` spaced by `stride`"""
    return (slice(None), slice(None)) + tuple(
        slice(o, o + s * (n - 1) + 1, s) for o, n, s in zip(offset, extents, stride))


def conv_output_shape(spatial: Sequence[int], kernel: Sequence[int], stride: Sequence[int],
                      padding: Sequence[int]) -> Tuple[int, ...]:
    return tuple((n + 2 * p - k) // s + 1 for n, k, s, p in zip(spatial, kernel, stride, padding))


def conv_transpose_output_shape(spatial: Sequence[int], kernel: Sequence[int], stride: Sequence[int],
                                padding: Sequence[int]) -> Tuple[int, ...]:
    return tuple((n - 1) * s + k - 2 * p for n, k, s, p in zip(spatial, kernel, stride, padding))


def conv(x, weight, bias=None, stride: IntOrTuple = 1, padding: IntOrTuple = 0) -> Tensor:
    """
    cross-correlation of a (N, C_in, *spatial) input with a (C_out, C_in, *kernel) weight
    :param stride: one value for all spatial axes or one per axis
    :param padding: zero padding added on both sides of every spatial axis
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim < 3 or weight.ndim != x.ndim or weight.shape[1] != x.shape[1]:
        raise ShapeError('conv', x.shape, weight.shape)
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (weight.shape[0],):
            raise ShapeError('conv', weight.shape, bias.shape, hint='bias must match out_channels')

    dims = x.ndim - 2
    spatial_axes = tuple(range(2, x.ndim))
    kernel = weight.shape[2:]
    stride = _as_tuple(stride, dims)
    padding = _as_tuple(padding, dims)
    out_shape = conv_output_shape(x.shape[2:], kernel, stride, padding)
    if min(out_shape) < 1:
        raise ShapeError('conv', x.shape, weight.shape, hint=f'kernel larger than padded input, stride {stride}')

    xp = np.pad(x.data, [(0, 0), (0, 0)] + [(p, p) for p in padding]) if any(padding) else x.data

    out = np.zeros((x.shape[0],) + out_shape + (weight.shape[0],), dtype=x.dtype)
    for offset in _offsets(kernel):
        patch = xp[_window(offset, out_shape, stride)]
        out += np.tensordot(patch, weight.data[(slice(None), slice(None)) + offset], axes=([1], [1]))
    out = np.ascontiguousarray(np.moveaxis(out, -1, 1))
    if bias is not None:
        out += bias.data.reshape((1, -1) + (1,) * dims)

    def backward(g):
        gw = np.zeros_like(weight.data)
        gxp = np.zeros_like(xp)
        reduce_axes = (0,) + spatial_axes
        for offset in _offsets(kernel):
            index = _window(offset, out_shape, stride)
            kernel_index = (slice(None), slice(None)) + offset
            gw[kernel_index] = np.tensordot(g, xp[index], axes=(reduce_axes, reduce_axes))
            gxp[index] += np.moveaxis(np.tensordot(g, weight.data[kernel_index], axes=([1], [0])), -1, 1)
        crop = (slice(None), slice(None)) + tuple(slice(p, p + n) for p, n in zip(padding, x.shape[2:]))
        grads = [np.ascontiguousarray(gxp[crop]), gw]
        if bias is not None:
            grads.append(g.sum(axis=reduce_axes))
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward, 'conv')


def conv_transpose(x, weight, bias=None, stride: IntOrTuple = 1, padding: IntOrTuple = 0) -> Tensor:
    """
    transposed convolution of a (N, C_in, *spatial) input with a (C_in, C_out, *kernel) weight,
    output extent per axis is (n - 1) * stride + kernel - 2 * padding
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim < 3 or weight.ndim != x.ndim or weight.shape[0] != x.shape[1]:
        raise ShapeError('conv_transpose', x.shape, weight.shape)
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (weight.shape[1],):
            raise ShapeError('conv_transpose', weight.shape, bias.shape, hint='bias must match out_channels')

    dims = x.ndim - 2
    spatial_axes = tuple(range(2, x.ndim))
    kernel = weight.shape[2:]
    stride = _as_tuple(stride, dims)
    padding = _as_tuple(padding, dims)
    in_shape = x.shape[2:]
    full_shape = conv_transpose_output_shape(in_shape, kernel, stride, (0,) * dims)
    out_shape = conv_transpose_output_shape(in_shape, kernel, stride, padding)
    if min(out_shape) < 1:
        raise ShapeError('conv_transpose', x.shape, weight.shape, hint=f'padding {padding} removes the output')

    full = np.zeros((x.shape[0], weight.shape[1]) + full_shape, dtype=x.dtype)
    for offset in _offsets(kernel):
        contribution = np.tensordot(x.data, weight.data[(slice(None), slice(None)) + offset], axes=([1], [0]))
        full[_window(offset, in_shape, stride)] += np.moveaxis(contribution, -1, 1)
    crop = (slice(None), slice(None)) + tuple(slice(p, p + n) for p, n in zip(padding, out_shape))
    out = np.ascontiguousarray(full[crop])
    if bias is not None:
        out += bias.data.reshape((1, -1) + (1,) * dims)

    def backward(g):
        g_full = np.zeros_like(full)
        g_full[crop] = g
        gx = np.zeros_like(x.data)
        gw = np.zeros_like(weight.data)
        reduce_axes = (0,) + spatial_axes
        for offset in _offsets(kernel):
            kernel_index = (slice(None), slice(None)) + offset
            g_patch = g_full[_window(offset, in_shape, stride)]
            gx += np.moveaxis(np.tensordot(g_patch, weight.data[kernel_index], axes=([1], [1])), -1, 1)
            gw[kernel_index] = np.tensordot(x.data, g_patch, axes=(reduce_axes, reduce_axes))
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=reduce_axes))
        return grads

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward, 'conv_transpose')
