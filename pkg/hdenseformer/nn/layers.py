from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..tensor import Tensor, conv, conv_transpose, instance_norm, layer_norm, linear
from .module import Module, Parameter

__all__ = ('uniform_init', 'Linear', 'LayerNorm', 'Conv', 'ConvTranspose', 'InstanceNorm')

KernelSize = Union[int, Sequence[int]]


def uniform_init(rng: np.random.Generator, shape: Sequence[int], fan_in: int) -> np.ndarray:
    """U(-1/sqrt(fan_in), +1/sqrt(fan_in))"""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=tuple(shape))


def _kernel(kernel: KernelSize, ndim: int) -> Tuple[int, ...]:
    return (kernel,) * ndim if isinstance(kernel, int) else tuple(kernel)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(uniform_init(rng, (out_features, in_features), in_features))
        self.bias = Parameter(np.zeros(out_features)) if bias else None

    def forward(self, x) -> Tensor:
        return linear(x, self.weight, self.bias)


class LayerNorm(Module):
    def __init__(self, features: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.weight = Parameter(np.ones(features))
        self.bias = Parameter(np.zeros(features))

    def forward(self, x) -> Tensor:
        return layer_norm(x, self.weight, self.bias, self.eps)


class InstanceNorm(Module):
    def __init__(self, channels: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.weight = Parameter(np.ones(channels))
        self.bias = Parameter(np.zeros(channels))

    def forward(self, x) -> Tensor:
        return instance_norm(x, self.weight, self.bias, self.eps)


class Conv(Module):
    """2D or 3D convolution, weight (out_channels, in_channels, *kernel)"""

    def __init__(self, in_channels: int, out_channels: int, kernel: KernelSize, ndim: int, rng: np.random.Generator,
                 stride: KernelSize = 1, padding: KernelSize = 0, bias: bool = True):
        super().__init__()
        self.kernel = _kernel(kernel, ndim)
        self.stride = stride
        self.padding = padding
        fan_in = in_channels * int(np.prod(self.kernel))
        self.weight = Parameter(uniform_init(rng, (out_channels, in_channels) + self.kernel, fan_in))
        self.bias = Parameter(np.zeros(out_channels)) if bias else None

    def forward(self, x) -> Tensor:
        return conv(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class ConvTranspose(Module):
    """transposed convolution, weight (in_channels, out_channels, *kernel)"""

    def __init__(self, in_channels: int, out_channels: int, kernel: KernelSize, ndim: int, rng: np.random.Generator,
                 stride: KernelSize = 1, padding: KernelSize = 0, bias: bool = True):
        super().__init__()
        self.kernel = _kernel(kernel, ndim)
        self.stride = stride
        self.padding = padding
        fan_in = in_channels * int(np.prod(self.kernel))
        self.weight = Parameter(uniform_init(rng, (in_channels, out_channels) + self.kernel, fan_in))
        self.bias = Parameter(np.zeros(out_channels)) if bias else None

    def forward(self, x) -> Tensor:
        return conv_transpose(x, self.weight, self.bias, stride=self.stride, padding=self.padding)
