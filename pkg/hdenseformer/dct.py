"""
densely connected transformer blocks

a block keeps a dense list [z0, z1, .., zL]; layer j projects the concatenation of
everything before it (width d + (j - 1) * g) down to the growth width g, runs
pre-norm self-attention with a residual and a pre-norm feed-forward map, and
appends its output. the block ends with GELU + one linear map from d + L * g back to d
"""
from dataclasses import dataclass, asdict
from typing import List, Optional, Sequence

import numpy as np

from .exceptions import ConfigError, ShapeError
from .nn import LayerNorm, Linear, Module, ModuleList
from .tensor import Tensor, as_tensor, concat, gelu, softmax

__all__ = (
    'DCTConfig', 'MultiHeadAttention', 'FeedForward', 'DCTLayer', 'DCTBlock', 'DCTStack',
    'StandardTransformerLayer', 'StandardTransformer', 'hidden_width'
)


def hidden_width(dim: int, mlp_ratio: float) -> int:
    return int(round(dim * mlp_ratio))


@dataclass
class DCTConfig:
    token_dim: int
    growth: int = 32
    layers_per_block: int = 4
    heads: int = 4
    mlp_ratio: float = 2.0

    def validate(self) -> 'DCTConfig':
        for key in ('token_dim', 'growth', 'layers_per_block', 'heads'):
            if getattr(self, key) < 1:
                raise ConfigError(key, f'must be >= 1, got {getattr(self, key)}')
        if self.mlp_ratio <= 0:
            raise ConfigError('mlp_ratio', f'must be > 0, got {self.mlp_ratio}')
        if self.growth % self.heads:
            raise ConfigError('heads', f'{self.heads} heads do not divide the growth width {self.growth}')
        return self

    def layer_input_dim(self, j: int) -> int:
        """input width of the j-th (1-based) projection"""
        return self.token_dim + (j - 1) * self.growth

    @property
    def concat_dim(self) -> int:
        return self.token_dim + self.layers_per_block * self.growth

    def to_dict(self) -> dict:
        return asdict(self)


class MultiHeadAttention(Module):
    """
    scaled dot-product self-attention over (n, dim) or (batch, n, dim) token tensors
    """

    def __init__(self, dim: int, heads: int, rng: np.random.Generator):
        super().__init__()
        if dim % heads:
            raise ConfigError('heads', f'{heads} heads do not divide the attention width {dim}')
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.scale = 1.0 / np.sqrt(self.head_dim)
        self.query = Linear(dim, dim, rng)
        self.key = Linear(dim, dim, rng)
        self.value = Linear(dim, dim, rng)
        self.out = Linear(dim, dim, rng)
        self.last_attention: Optional[np.ndarray] = None

    def _split_heads(self, x: Tensor) -> Tensor:
        lead = x.shape[:-2]
        n = x.shape[-2]
        x = x.reshape(lead + (n, self.heads, self.head_dim))
        k = len(lead)
        return x.transpose(tuple(range(k)) + (k + 1, k, k + 2))

    def _merge_heads(self, x: Tensor) -> Tensor:
        lead = x.shape[:-3]
        k = len(lead)
        n = x.shape[-2]
        x = x.transpose(tuple(range(k)) + (k + 1, k, k + 2))
        return x.reshape(lead + (n, self.dim))

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        if x.ndim < 2 or x.shape[-1] != self.dim:
            raise ShapeError('multi_head_attention', x.shape, hint=f'expected (..., n_tokens, {self.dim})')

        q = self._split_heads(self.query(x))
        k = self._split_heads(self.key(x))
        v = self._split_heads(self.value(x))
        swap = tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2)
        weights = softmax((q @ k.transpose(swap)) * self.scale, axis=-1)
        self.last_attention = weights.data
        return self.out(self._merge_heads(weights @ v))


class FeedForward(Module):
    def __init__(self, dim: int, mlp_ratio: float, rng: np.random.Generator):
        super().__init__()
        self.fc1 = Linear(dim, hidden_width(dim, mlp_ratio), rng)
        self.fc2 = Linear(hidden_width(dim, mlp_ratio), dim, rng)

    def forward(self, x) -> Tensor:
        return self.fc2(gelu(self.fc1(x)))


class DCTLayer(Module):
    def __init__(self, j: int, cfg: DCTConfig, rng: np.random.Generator):
        super().__init__()
        self.j = j
        self.in_dim = cfg.layer_input_dim(j)
        self.proj = Linear(self.in_dim, cfg.growth, rng)
        self.norm1 = LayerNorm(cfg.growth)
        self.attn = MultiHeadAttention(cfg.growth, cfg.heads, rng)
        self.norm2 = LayerNorm(cfg.growth)
        self.ffn = FeedForward(cfg.growth, cfg.mlp_ratio, rng)

    def forward(self, previous: Sequence[Tensor]) -> Tensor:
        if not previous:
            raise ShapeError('dct_layer', hint='needs at least the block input')
        token_counts = {p.shape[:-1] for p in previous}
        if len(token_counts) != 1:
            raise ShapeError('dct_layer', *(p.shape for p in previous), hint='token counts differ')

        projected = self.proj(concat(list(previous), axis=-1))
        attended = self.attn(self.norm1(projected)) + projected
        return self.ffn(self.norm2(attended))


class DCTBlock(Module):
    def __init__(self, cfg: DCTConfig, rng: np.random.Generator):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.layers = ModuleList(DCTLayer(j, cfg, rng) for j in range(1, cfg.layers_per_block + 1))
        self.head = Linear(cfg.concat_dim, cfg.token_dim, rng)

    def forward(self, z0) -> Tensor:
        z0 = as_tensor(z0)
        if z0.shape[-1] != self.cfg.token_dim:
            raise ShapeError('dct_block', z0.shape, hint=f'token dim must be {self.cfg.token_dim}')
        dense: List[Tensor] = [z0]
        for layer in self.layers:
            dense.append(layer(dense))
        return self.head(gelu(concat(dense, axis=-1)))


class DCTStack(Module):
    def __init__(self, cfg: DCTConfig, depth: int, rng: np.random.Generator):
        super().__init__()
        if depth < 1:
            raise ConfigError('dct_depth', f'must be >= 1, got {depth}')
        self.depth = depth
        self.blocks = ModuleList(DCTBlock(cfg, rng) for _ in range(depth))

    def forward(self, z) -> Tensor:
        for block in self.blocks:
            z = block(z)
        return z


class StandardTransformerLayer(Module):
    """pre-norm transformer layer at full width, used by the stack without dense connections"""

    def __init__(self, dim: int, heads: int, mlp_ratio: float, rng: np.random.Generator):
        super().__init__()
        self.norm1 = LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, heads, rng)
        self.norm2 = LayerNorm(dim)
        self.ffn = FeedForward(dim, mlp_ratio, rng)

    def forward(self, x) -> Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.ffn(self.norm2(x))


class StandardTransformer(Module):
    def __init__(self, dim: int, layers: int, heads: int, mlp_ratio: float, rng: np.random.Generator):
        super().__init__()
        if layers < 1:
            raise ConfigError('standard_layers', f'must be >= 1, got {layers}')
        self.layers = ModuleList(StandardTransformerLayer(dim, heads, mlp_ratio, rng) for _ in range(layers))

    def forward(self, x) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x
