"""
multi-path parallel embedding

every modality gets its own path (patch embedding, transformer stack, reshape
back onto the patch grid). the path outputs are concatenated on channels, mixed
by a 1x1 convolution into the fused feature and upsampled to 1/8 scale. from there
the fused feature is progressively upsampled x2 and projected by per-level 1x1
adapters to the encoder widths, level i meaning scale 1/2^i
"""
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Sequence, Tuple

import numpy as np

from .dct import DCTConfig, DCTStack, StandardTransformer
from .enums import EmbeddingPaths, TransformerKind
from .exceptions import ConfigError, ShapeError
from .nn import Conv, Module, ModuleList, Parameter
from .tensor import Tensor, as_tensor, concat, upsample

__all__ = ('MPEConfig', 'FusedFeature', 'PatchEmbedding', 'EmbeddingPath', 'MultiPathEmbedding', 'FUSED_LEVEL',
           'POSITION_INIT_STD')

# the fused feature lives at 1/8 scale, the deepest encoder stage
FUSED_LEVEL = 3
POSITION_INIT_STD = 0.02


@dataclass
class MPEConfig:
    modalities: int
    input_shape: Tuple[int, ...]
    patch: int = 16
    token_dim: int = 128
    fused_channels: int = 128
    dct_depth: int = 6
    growth: int = 32
    layers_per_block: int = 4
    heads: int = 4
    mlp_ratio: float = 2.0
    transformer: TransformerKind = TransformerKind.DCT
    standard_layers: int = 12
    embedding_paths: EmbeddingPaths = EmbeddingPaths.MULTI
    injection_levels: Tuple[int, ...] = (1, 2, 3)
    encoder_channels: Tuple[int, ...] = (32, 64, 128, 256)

    def validate(self) -> 'MPEConfig':
        if self.modalities < 1:
            raise ConfigError('modalities', f'at least one modality is needed, got {self.modalities}')
        if len(self.input_shape) not in (2, 3):
            raise ConfigError('input_shape', f'expected 2 or 3 spatial extents, got {self.input_shape}')
        bad = [n for n in self.input_shape if n < self.patch or n % self.patch]
        if bad:
            raise ConfigError('input_shape', f'extents {self.input_shape} must be positive multiples of the '
                                             f'patch size {self.patch}, pad or crop the volumes')
        unknown = set(self.injection_levels) - set(range(FUSED_LEVEL + 1))
        if unknown:
            raise ConfigError('injection_levels', f'unknown levels {sorted(unknown)}, expected a subset of 0..3')
        if len(self.encoder_channels) != FUSED_LEVEL + 1:
            raise ConfigError('channels', f'expected 4 encoder widths, got {self.encoder_channels}')
        self.dct_config().validate()
        return self

    @property
    def ndim(self) -> int:
        return len(self.input_shape)

    @property
    def grid(self) -> Tuple[int, ...]:
        return tuple(n // self.patch for n in self.input_shape)

    @property
    def n_tokens(self) -> int:
        return int(np.prod(self.grid))

    @property
    def n_paths(self) -> int:
        return self.modalities if self.embedding_paths is EmbeddingPaths.MULTI else 1

    @property
    def path_in_channels(self) -> int:
        return 1 if self.embedding_paths is EmbeddingPaths.MULTI else self.modalities

    def dct_config(self) -> DCTConfig:
        return DCTConfig(token_dim=self.token_dim, growth=self.growth, layers_per_block=self.layers_per_block,
                         heads=self.heads, mlp_ratio=self.mlp_ratio)


class FusedFeature(NamedTuple):
    tensor: Tensor
    level: int = FUSED_LEVEL

    @property
    def scale(self) -> float:
        return 1.0 / 2 ** self.level

    @property
    def channels(self) -> int:
        return self.tensor.shape[1]


class PatchEmbedding(Module):
    """non-overlapping patch convolution (kernel = stride = patch) plus a learnable positional embedding"""

    def __init__(self, in_channels: int, cfg: MPEConfig, rng: np.random.Generator):
        super().__init__()
        self.patch = cfg.patch
        self.grid = cfg.grid
        self.proj = Conv(in_channels, cfg.token_dim, cfg.patch, cfg.ndim, rng, stride=cfg.patch)
        self.position = Parameter(rng.normal(0.0, POSITION_INIT_STD, size=(cfg.n_tokens, cfg.token_dim)))

    def forward(self, x) -> Tensor:
        """(N, C_in, *spatial) -> tokens (N, n_tokens, token_dim)"""
        x = as_tensor(x)
        spatial = x.shape[2:]
        if any(n % self.patch for n in spatial):
            raise ShapeError('patch_embed', x.shape,
                             hint=f'spatial extents must be divisible by {self.patch}, pad or crop the input')
        grid = tuple(n // self.patch for n in spatial)
        if grid != self.grid:
            raise ShapeError('patch_embed', x.shape, hint=f'built for a patch grid of {self.grid}, got {grid}')

        features = self.proj(x)
        n, l = features.shape[0], features.shape[1]
        tokens = features.reshape(n, l, -1).transpose(0, 2, 1)
        return tokens + self.position


class EmbeddingPath(Module):
    def __init__(self, in_channels: int, cfg: MPEConfig, rng: np.random.Generator):
        super().__init__()
        self.grid = cfg.grid
        self.embed = PatchEmbedding(in_channels, cfg, rng)
        if cfg.transformer is TransformerKind.DCT:
            self.transformer = DCTStack(cfg.dct_config(), cfg.dct_depth, rng)
        else:
            self.transformer = StandardTransformer(cfg.token_dim, cfg.standard_layers, cfg.heads, cfg.mlp_ratio, rng)

    def forward(self, x) -> Tensor:
        """(N, C_in, *spatial) -> (N, token_dim, *spatial / patch)"""
        tokens = self.transformer(self.embed(x))
        n, _, l = tokens.shape
        return tokens.transpose(0, 2, 1).reshape((n, l) + self.grid)


class MultiPathEmbedding(Module):
    def __init__(self, cfg: MPEConfig, rng: np.random.Generator):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.levels: Tuple[int, ...] = tuple(sorted(set(cfg.injection_levels)))
        self.paths = ModuleList(EmbeddingPath(cfg.path_in_channels, cfg, rng) for _ in range(cfg.n_paths))
        self.fusion = Conv(cfg.n_paths * cfg.token_dim, cfg.fused_channels, 1, cfg.ndim, rng)
        self.adapters = ModuleList(Conv(cfg.fused_channels, cfg.encoder_channels[level], 1, cfg.ndim, rng)
                                   for level in self.levels)

    def path_inputs(self, x: Tensor) -> List[Tensor]:
        if x.ndim != self.cfg.ndim + 2 or x.shape[1] != self.cfg.modalities:
            raise ShapeError('mpe', x.shape, hint=f'expected (N, {self.cfg.modalities}, *spatial)')
        if self.cfg.embedding_paths is EmbeddingPaths.SINGLE:
            return [x]
        return [x[:, i:i + 1] for i in range(self.cfg.modalities)]

    def path_forward(self, x, index: int) -> Tensor:
        """runs path `index` on its own input slice, (N, 1, *spatial) for multi-path embedding"""
        return self.paths[index](x)

    def fuse_paths(self, features: Sequence[Tensor]) -> FusedFeature:
        if len(features) != len(self.paths):
            raise ShapeError('fuse_paths', *(f.shape for f in features),
                             hint=f'expected {len(self.paths)} path features')
        if len({f.shape for f in features}) != 1:
            raise ShapeError('fuse_paths', *(f.shape for f in features), hint='path features must share a shape')
        mixed = self.fusion(concat(list(features), axis=1))
        return FusedFeature(upsample(mixed, 2), FUSED_LEVEL)

    def multiscale_features(self, fused: FusedFeature, levels: Iterable[int] = None) -> Dict[int, Tensor]:
        """
        one tensor per requested level, obtained by repeated x2 linear upsampling of the fused feature
        followed by the level's channel adapter
        """
        levels = self.levels if levels is None else tuple(sorted(set(levels)))
        unknown = [level for level in levels if level not in self.levels]
        if unknown:
            raise ConfigError('injection_levels', f'no adapter for levels {unknown}, built for {self.levels}')

        out = {}
        current = fused.tensor
        for level in range(fused.level, -1, -1):
            if level in levels:
                out[level] = self.adapters[self.levels.index(level)](current)
            if levels and level > min(levels):
                current = upsample(current, 2)
            else:
                break
        return out

    def forward(self, x) -> Dict[int, Tensor]:
        x = as_tensor(x)
        features = [self.path_forward(part, i) for i, part in enumerate(self.path_inputs(x))]
        return self.multiscale_features(self.fuse_paths(features))
