from contextlib import contextmanager
from typing import Union

import numpy as np

__all__ = (
    'get_dtype', 'set_dtype', 'precision', 'is_grad_enabled', 'set_grad_enabled', 'no_grad', 'SUPPORTED_DTYPES'
)

SUPPORTED_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

_dtype: np.dtype = np.dtype(np.float32)
_grad_enabled: bool = True


def get_dtype() -> np.dtype:
    """float type used for new tensors and parameters"""
    return _dtype


def set_dtype(dtype: Union[str, type, np.dtype]):
    global _dtype
    dtype = np.dtype(dtype)
    if dtype not in SUPPORTED_DTYPES:
        raise ValueError(f'unsupported tensor dtype: {dtype}, expected float32 or float64')
    _dtype = dtype


@contextmanager
def precision(dtype: Union[str, type, np.dtype]):
    """
    temporarily switches the default float type, restores the previous one on exit

    >>> with precision('float64'):
    >>>     report = grad_check(f, x)
    """
    previous = _dtype
    set_dtype(dtype)
    try:
        yield
    finally:
        set_dtype(previous)


def is_grad_enabled() -> bool:
    return _grad_enabled


def set_grad_enabled(enabled: bool):
    global _grad_enabled
    _grad_enabled = enabled


@contextmanager
def no_grad():
    """disables tape recording, ops inside the block produce constant tensors"""
    previous = _grad_enabled
    set_grad_enabled(False)
    try:
        yield
    finally:
        set_grad_enabled(previous)
