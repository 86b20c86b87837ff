"""
u-shaped convolutional encoder / decoder with additive feature injection and
four deep-supervision heads

levels are numbered by their downsampling exponent: level i runs at scale 1/2^i,
level 3 (1/8) is the deepest one
"""
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConfigError, ShapeError
from .nn import Conv, ConvTranspose, InstanceNorm, Module, ModuleList
from .tensor import Tensor, as_tensor, concat, relu

__all__ = ('BackboneConfig', 'MultiScaleOutput', 'ConvUnit', 'EncoderStage', 'Encoder', 'DecoderStage', 'Decoder',
           'LEVELS', 'MAX_DOWNSAMPLING')

LEVELS = 4
MAX_DOWNSAMPLING = 2 ** (LEVELS - 1)


@dataclass
class BackboneConfig:
    ndim: int
    in_channels: int
    channels: Tuple[int, ...] = (32, 64, 128, 256)
    classes: int = 2

    def validate(self) -> 'BackboneConfig':
        if self.ndim not in (2, 3):
            raise ConfigError('mode', f'expected 2 or 3 spatial axes, got {self.ndim}')
        if len(self.channels) != LEVELS or min(self.channels) < 1:
            raise ConfigError('channels', f'expected {LEVELS} positive widths, got {self.channels}')
        if self.in_channels < 1:
            raise ConfigError('in_channels', f'must be >= 1, got {self.in_channels}')
        if self.classes < 2:
            raise ConfigError('classes', f'must be >= 2, got {self.classes}')
        return self


class MultiScaleOutput(NamedTuple):
    """decoder logits O^0..O^3, O^i with shape (N, classes, *spatial / 2^i)"""
    outputs: List[Tensor]

    @property
    def scales(self) -> Tuple[float, ...]:
        return tuple(1.0 / 2 ** i for i in range(len(self.outputs)))

    def at(self, level: int) -> Tensor:
        return self.outputs[level]

    def __len__(self):
        return len(self.outputs)


class ConvUnit(Module):
    """3x3 convolution, instance normalization, ReLU"""

    def __init__(self, in_channels: int, out_channels: int, ndim: int, rng: np.random.Generator, stride: int = 1):
        super().__init__()
        # no bias, the normalization removes any per-channel offset
        self.conv = Conv(in_channels, out_channels, 3, ndim, rng, stride=stride, padding=1, bias=False)
        self.norm = InstanceNorm(out_channels)

    def forward(self, x) -> Tensor:
        return relu(self.norm(self.conv(x)))


class EncoderStage(Module):
    def __init__(self, in_channels: int, out_channels: int, ndim: int, rng: np.random.Generator, downsample: bool):
        super().__init__()
        self.units = ModuleList([
            ConvUnit(in_channels, out_channels, ndim, rng, stride=2 if downsample else 1),
            ConvUnit(out_channels, out_channels, ndim, rng),
        ])

    def forward(self, x) -> Tensor:
        for unit in self.units:
            x = unit(x)
        return x


class Encoder(Module):
    def __init__(self, cfg: BackboneConfig, rng: np.random.Generator):
        super().__init__()
        widths = (cfg.in_channels,) + tuple(cfg.channels)
        self.stages = ModuleList(EncoderStage(widths[i], widths[i + 1], cfg.ndim, rng, downsample=i > 0)
                                 for i in range(LEVELS))

    def forward(self, x, injected: Optional[Dict[int, Tensor]] = None) -> List[Tensor]:
        """
        :param x: modalities concatenated on the channel axis, (N, C, *spatial)
        :param injected: level -> tensor added element-wise to that stage's output
        :return: stage features, shallowest (level 0) first
        """
        injected = injected or {}
        features = []
        for level, stage in enumerate(self.stages):
            x = stage(x)
            if level in injected:
                feature = injected[level]
                if feature.shape != x.shape:
                    raise ShapeError('encoder_injection', x.shape, feature.shape,
                                     hint=f'injected feature at scale 1/{2 ** level} does not match the stage')
                x = x + feature
            features.append(x)
        return features


class DecoderStage(Module):
    def __init__(self, in_channels: int, out_channels: int, ndim: int, rng: np.random.Generator):
        super().__init__()
        self.up = ConvTranspose(in_channels, out_channels, 2, ndim, rng, stride=2)
        self.units = ModuleList([
            ConvUnit(2 * out_channels, out_channels, ndim, rng),
            ConvUnit(out_channels, out_channels, ndim, rng),
        ])

    def forward(self, x, skip) -> Tensor:
        x = self.up(x)
        if x.shape != skip.shape:
            raise ShapeError('decoder_skip', x.shape, skip.shape)
        x = concat([x, skip], axis=1)
        for unit in self.units:
            x = unit(x)
        return x


class Decoder(Module):
    def __init__(self, cfg: BackboneConfig, rng: np.random.Generator):
        super().__init__()
        c = cfg.channels
        # stages[k] upsamples from level k + 1 to level k
        self.stages = ModuleList(DecoderStage(c[level + 1], c[level], cfg.ndim, rng) for level in range(LEVELS - 1))
        self.heads = ModuleList(Conv(c[level], cfg.classes, 1, cfg.ndim, rng) for level in range(LEVELS))

    def _check(self, features: Sequence[Tensor]):
        if len(features) != LEVELS:
            raise ShapeError('decoder', *(f.shape for f in features), hint=f'expected {LEVELS} stage features')

    def forward(self, features: Sequence[Tensor]) -> MultiScaleOutput:
        """:param features: encoder stage features, deepest (level 3) first"""
        self._check(features)
        outputs = [None] * LEVELS
        x = features[0]
        outputs[LEVELS - 1] = self.heads[LEVELS - 1](x)
        for level in range(LEVELS - 2, -1, -1):
            x = self.stages[level](x, features[LEVELS - 1 - level])
            outputs[level] = self.heads[level](x)
        return MultiScaleOutput(outputs)

    def forward_full_resolution(self, features: Sequence[Tensor]) -> Tensor:
        """O^0 only, the auxiliary heads are skipped"""
        self._check(features)
        x = features[0]
        for level in range(LEVELS - 2, -1, -1):
            x = self.stages[level](x, features[LEVELS - 1 - level])
        return self.heads[0](x)
