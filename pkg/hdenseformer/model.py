from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .backbone import BackboneConfig, Decoder, Encoder, MultiScaleOutput, MAX_DOWNSAMPLING
from .enums import EmbeddingPaths, Mode, TransformerKind
from .exceptions import ConfigError, ShapeError
from .mpe import MPEConfig, MultiPathEmbedding
from .nn import Module
from .shared import no_grad
from .tensor import Tensor, as_tensor

__all__ = ('ModelConfig', 'HDenseFormer', 'build_model')

_ENUM_FIELDS = {'mode': Mode, 'transformer': TransformerKind, 'embedding_paths': EmbeddingPaths}
_TUPLE_FIELDS = ('input_shape', 'channels', 'injection_levels')


@dataclass
class ModelConfig:
    mode: Mode = Mode.THREE_D
    in_channels: int = 2
    input_shape: Tuple[int, ...] = (32, 32, 32)
    patch_size: int = 16
    embed_dim: int = 128
    fused_channels: int = 128
    growth: int = 32
    layers_per_block: int = 4
    heads: int = 4
    mlp_ratio: float = 2.0
    dct_depth: int = 6
    channels: Tuple[int, ...] = (32, 64, 128, 256)
    classes: int = 2
    injection_levels: Tuple[int, ...] = (1, 2, 3)
    transformer: TransformerKind = TransformerKind.DCT
    standard_layers: int = 12
    embedding_paths: EmbeddingPaths = EmbeddingPaths.MULTI
    use_mpe: bool = True

    def __post_init__(self):
        for key, enum in _ENUM_FIELDS.items():
            value = getattr(self, key)
            if not isinstance(value, enum):
                try:
                    setattr(self, key, enum(value))
                except ValueError:
                    raise ConfigError(key, f'unknown value {value!r}, expected one of '
                                           f'{[e.value for e in enum]}') from None
        for key in _TUPLE_FIELDS:
            setattr(self, key, tuple(int(v) for v in getattr(self, key)))

    @property
    def ndim(self) -> int:
        return self.mode.ndim

    def mpe_config(self) -> MPEConfig:
        return MPEConfig(
            modalities=self.in_channels, input_shape=self.input_shape, patch=self.patch_size,
            token_dim=self.embed_dim, fused_channels=self.fused_channels, dct_depth=self.dct_depth,
            growth=self.growth, layers_per_block=self.layers_per_block, heads=self.heads,
            mlp_ratio=self.mlp_ratio, transformer=self.transformer, standard_layers=self.standard_layers,
            embedding_paths=self.embedding_paths, injection_levels=self.injection_levels,
            encoder_channels=self.channels,
        )

    def backbone_config(self) -> BackboneConfig:
        return BackboneConfig(ndim=self.ndim, in_channels=self.in_channels, channels=self.channels,
                              classes=self.classes)

    def validate(self) -> 'ModelConfig':
        if len(self.input_shape) != self.ndim:
            raise ConfigError('input_shape', f'{self.mode.value} mode needs {self.ndim} extents, '
                                             f'got {self.input_shape}')
        if any(n % MAX_DOWNSAMPLING for n in self.input_shape):
            raise ConfigError('input_shape', f'extents {self.input_shape} must be divisible by {MAX_DOWNSAMPLING}')
        self.backbone_config().validate()
        if self.use_mpe:
            self.mpe_config().validate()
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key in _ENUM_FIELDS:
            data[key] = getattr(self, key).value
        for key in _TUPLE_FIELDS:
            data[key] = list(data[key])
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ModelConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], 'unknown model setting')
        return cls(**data)


class HDenseFormer(Module):
    """
    multi-path transformer embedding feeding a u-shaped CNN by element-wise addition

    the embedding and the CNN draw their initial weights from separate seeded streams,
    so the CNN of a model built with use_mpe=False is identical to the one with it
    """

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.seed = seed
        self.mpe = MultiPathEmbedding(cfg.mpe_config(), np.random.default_rng([seed, 0])) if cfg.use_mpe else None
        backbone_rng = np.random.default_rng([seed, 1])
        self.encoder = Encoder(cfg.backbone_config(), backbone_rng)
        self.decoder = Decoder(cfg.backbone_config(), backbone_rng)

    def _check_input(self, x: Tensor):
        expected = (self.cfg.in_channels,) + self.cfg.input_shape
        if x.ndim != self.cfg.ndim + 2 or x.shape[1:] != expected:
            raise ShapeError('model_forward', x.shape, hint=f'expected (N, {", ".join(map(str, expected))})')

    def encode(self, x, zero_injection: bool = False):
        x = as_tensor(x)
        self._check_input(x)
        injected = None
        if self.mpe is not None:
            injected = self.mpe(x)
            if zero_injection:
                injected = {level: Tensor(np.zeros_like(t.data)) for level, t in injected.items()}
        return self.encoder(x, injected)

    def forward(self, x, zero_injection: bool = False) -> MultiScaleOutput:
        """
        :param x: (N, modalities, *spatial) float tensor
        :param zero_injection: replace every injected feature by zeros (reference for the plain CNN)
        """
        features = self.encode(x, zero_injection)
        return self.decoder(features[::-1])

    def predict_logits(self, x) -> Tensor:
        """full-resolution logits O^0 without the auxiliary heads"""
        return self.decoder.forward_full_resolution(self.encode(x)[::-1])

    def predict(self, x) -> np.ndarray:
        """argmax label mask (N, *spatial) as uint8"""
        with no_grad():
            logits = self.predict_logits(x)
        return np.argmax(logits.data, axis=1).astype(np.uint8)


def build_model(cfg: ModelConfig, seed: int = 0, dtype: Optional[Any] = None) -> HDenseFormer:
    model = HDenseFormer(cfg, seed)
    if dtype is not None:
        model.astype(dtype)
    return model
