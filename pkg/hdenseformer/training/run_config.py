"""
one training run's settings

the file form is the JSON object the Config class writes (sorted keys, indent 2):

    {
      "adam_eps": 1e-08,
      "augment": true,
      "batch_size": null,          null picks 2 for 3d and 8 for 2d models
      "betas": [0.9, 0.999],
      "data_dir": "data",          "ENV_NAME" reads the path from os.environ["NAME"]
      "deterministic": true,       single-threaded loading, byte-reproducible output
      "flip": true,
      "fold": null,                null trains and validates on every case
      "folds": 5,
      "loss": {...},               LossConfig fields
      "lr": 0.001,
      "max_epochs": 100,
      "model": {...},              ModelConfig fields
      "output_dir": "runs/run",
      "patience": 30,
      "poly_exponent": 0.9,
      "record_runs": true,         write rows to <output_dir>/runs.sqlite
      "rotate": true,
      "seed": 0,
      "weight_decay": 0.0001
    }
"""
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from ..config import Config, cfg, get_data_dir, get_output_dir, resolve_env
from ..enums import Mode
from ..exceptions import ConfigError
from ..loss import LossConfig
from ..model import ModelConfig
from .schedule import POLY_EXPONENT

__all__ = ('RunConfig', 'DEFAULT_BATCH_SIZES')

DEFAULT_BATCH_SIZES = {Mode.THREE_D: 2, Mode.TWO_D: 8}


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    lr: float = 1e-3
    weight_decay: float = 1e-4
    betas: Tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    poly_exponent: float = POLY_EXPONENT
    max_epochs: int = 100
    patience: int = 30
    batch_size: Optional[int] = None
    folds: int = 5
    fold: Optional[int] = None
    augment: bool = True
    flip: bool = True
    rotate: bool = True
    seed: int = 0
    data_dir: str = 'data'
    output_dir: str = 'runs/run'
    deterministic: bool = True
    record_runs: bool = True

    def __post_init__(self):
        if isinstance(self.model, dict):
            self.model = ModelConfig.from_dict(self.model)
        if isinstance(self.loss, dict):
            unknown = set(self.loss) - {f.name for f in fields(LossConfig)}
            if unknown:
                raise ConfigError(f'loss.{sorted(unknown)[0]}', 'unknown loss setting')
            self.loss = LossConfig(**self.loss)
        self.betas = tuple(float(b) for b in self.betas)

    @property
    def effective_batch_size(self) -> int:
        return self.batch_size if self.batch_size is not None else DEFAULT_BATCH_SIZES[self.model.mode]

    @property
    def data_path(self) -> Path:
        return Path(resolve_env(self.data_dir, 'data_dir'))

    @property
    def output_path(self) -> Path:
        return Path(resolve_env(self.output_dir, 'output_dir'))

    def validate(self) -> 'RunConfig':
        # lr 0 is accepted and freezes the model
        if not math.isfinite(self.lr) or self.lr < 0:
            raise ConfigError('lr', f'must be a finite value >= 0, got {self.lr}')
        if self.weight_decay < 0:
            raise ConfigError('weight_decay', f'must be >= 0, got {self.weight_decay}')
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            raise ConfigError('betas', f'must be two values in [0, 1), got {self.betas}')
        if self.adam_eps <= 0:
            raise ConfigError('adam_eps', f'must be > 0, got {self.adam_eps}')
        if self.poly_exponent <= 0:
            raise ConfigError('poly_exponent', f'must be > 0, got {self.poly_exponent}')
        if self.max_epochs < 1:
            raise ConfigError('max_epochs', f'must be >= 1, got {self.max_epochs}')
        if not 1 <= self.patience <= self.max_epochs:
            raise ConfigError('patience', f'must lie in [1, max_epochs={self.max_epochs}], got {self.patience}')
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError('batch_size', f'must be >= 1, got {self.batch_size}')
        if self.fold is not None:
            if self.folds < 2:
                raise ConfigError('folds', f'cross-validation needs at least 2 folds, got {self.folds}')
            if not 0 <= self.fold < self.folds:
                raise ConfigError('fold', f'must lie in [0, {self.folds}), got {self.fold}')
        self.model.validate()
        self.loss.validate()
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data['model'] = self.model.to_dict()
        data['loss'] = self.loss.to_dict()
        data['betas'] = list(self.betas)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], 'unknown run setting')
        try:
            return cls(**data).validate()
        except TypeError as e:
            raise ConfigError('run', f'malformed value: {e}') from None

    @classmethod
    def from_harness(cls) -> 'RunConfig':
        """default run settings with the data folder, output folder and seed taken from the harness config"""
        return cls(data_dir=str(get_data_dir()), output_dir=str(get_output_dir() / 'run'), seed=int(cfg.seed))

    @classmethod
    def load(cls, path) -> 'RunConfig':
        """reads a run file, keys it lacks are filled with their defaults and written back"""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(str(path), 'run config file does not exist')
        config = Config(path, **cls().to_dict())
        return cls.from_dict(dict(config.data))

    def save(self, path) -> Path:
        path = Path(path)
        config = Config(path, **self.to_dict())
        config.data = self.to_dict()
        config.save()
        return path

    def replace(self, **changes) -> 'RunConfig':
        data = self.to_dict()
        data.update(changes)
        return RunConfig.from_dict(data)
