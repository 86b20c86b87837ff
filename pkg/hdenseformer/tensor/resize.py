"""
separable resizing of the spatial axes of (N, C, *spatial) tensors

each axis is resampled by a dense (n_out, n_in) interpolation matrix, so the
backward pass is the transposed matrix. sampling uses half-pixel centres
(corner alignment off): source = (dst + 0.5) * n_in / n_out - 0.5
"""
from typing import Sequence, Tuple, Union

import numpy as np

from ..enums import InterpolationMode
from ..exceptions import ShapeError
from .tensor import Tensor, as_tensor

__all__ = ('resize', 'upsample', 'interpolation_matrix', 'nearest_indices', 'resize_nearest_array')

ModeLike = Union[str, InterpolationMode]


def nearest_indices(n_in: int, n_out: int) -> np.ndarray:
    """source index of every output position for nearest-neighbour sampling"""
    return np.minimum(np.floor(np.arange(n_out) * (n_in / n_out)).astype(np.int64), n_in - 1)


def interpolation_matrix(n_in: int, n_out: int, mode: ModeLike, dtype=np.float64) -> np.ndarray:
    mode = InterpolationMode(mode)
    matrix = np.zeros((n_out, n_in), dtype=dtype)
    rows = np.arange(n_out)
    if mode is InterpolationMode.NEAREST:
        matrix[rows, nearest_indices(n_in, n_out)] = 1.0
        return matrix

    source = np.clip((rows + 0.5) * (n_in / n_out) - 0.5, 0.0, n_in - 1)
    lower = np.floor(source).astype(np.int64)
    upper = np.minimum(lower + 1, n_in - 1)
    weight = source - lower
    np.add.at(matrix, (rows, lower), 1.0 - weight)
    np.add.at(matrix, (rows, upper), weight)
    return matrix


def _apply_along(data: np.ndarray, matrix: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(matrix, data, axes=([1], [axis])), 0, axis)


def resize(x, size: Sequence[int], mode: ModeLike = InterpolationMode.LINEAR) -> Tensor:
    """
    resamples every spatial axis of `x` to `size` (bi-/tri-linear or nearest)
    """
    x = as_tensor(x)
    size = tuple(int(s) for s in size)
    if x.ndim < 3 or len(size) != x.ndim - 2 or min(size) < 1:
        raise ShapeError('resize', x.shape, size)

    matrices = {}
    for i, (n_in, n_out) in enumerate(zip(x.shape[2:], size)):
        if n_in != n_out:
            matrices[i + 2] = interpolation_matrix(n_in, n_out, mode, dtype=x.dtype)

    out = x.data
    for axis, matrix in matrices.items():
        out = _apply_along(out, matrix, axis)
    out = np.ascontiguousarray(out) if matrices else out.copy()

    def backward(g):
        for axis, matrix in matrices.items():
            g = _apply_along(g, matrix.T, axis)
        return np.ascontiguousarray(g),

    return Tensor.from_op(out, (x,), backward, 'resize')


def upsample(x, factor: int = 2, mode: ModeLike = InterpolationMode.LINEAR) -> Tensor:
    x = as_tensor(x)
    return resize(x, tuple(n * factor for n in x.shape[2:]), mode)


def resize_nearest_array(array: np.ndarray, size: Sequence[int]) -> np.ndarray:
    """nearest-neighbour resize of the trailing len(size) axes of a plain array (keeps label values intact)"""
    size = tuple(size)
    offset = array.ndim - len(size)
    if offset < 0:
        raise ShapeError('resize_nearest_array', array.shape, size)
    out = array
    for i, n_out in enumerate(size):
        axis = offset + i
        if out.shape[axis] != n_out:
            out = np.take(out, nearest_indices(out.shape[axis], n_out), axis=axis)
    return out
