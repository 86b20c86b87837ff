"""
focal + dice segmentation loss and its deep-supervision aggregate

    loss = 1 - (2 * sum(p * q) + eps) / (sum(p + q) + eps)   dice on the foreground channel
         + mean(-(1 - p_t) ** gamma * log(p_t))              focal on the true-class probability

eps sits in both numerator and denominator, so an empty target predicted as empty costs 0
"""
from dataclasses import asdict, dataclass
from typing import List, Sequence

import numpy as np

from .backbone import MultiScaleOutput
from .exceptions import ConfigError, InvalidLabelError, ShapeError
from .tensor import Tensor, as_tensor, log, one_hot, resize_nearest_array, softmax

__all__ = ('LossConfig', 'validate_target', 'focal_dice_loss', 'ds_weights', 'ds_loss')

FOREGROUND = 1


@dataclass
class LossConfig:
    gamma: float = 2.0
    smooth: float = 1e-5
    deep_supervision: bool = True
    log_floor: float = 1e-12

    def validate(self) -> 'LossConfig':
        if self.gamma < 0:
            raise ConfigError('gamma', f'must be >= 0, got {self.gamma}')
        if self.smooth <= 0:
            raise ConfigError('smooth', f'must be > 0, got {self.smooth}')
        if not 0 < self.log_floor < 1:
            raise ConfigError('log_floor', f'must lie in (0, 1), got {self.log_floor}')
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def validate_target(target) -> np.ndarray:
    """returns the mask as int64, raises InvalidLabelError on anything but 0 and 1"""
    target = np.asarray(target)
    values = np.unique(target)
    if np.setdiff1d(values, (0, 1)).size:
        raise InvalidLabelError(values.tolist())
    return target.astype(np.int64)


def focal_dice_loss(logits, target, cfg: LossConfig = None) -> Tensor:
    """
    :param logits: (N, classes, *spatial) raw scores, softmax is taken over the class axis
    :param target: (N, *spatial) binary mask
    """
    cfg = cfg or LossConfig()
    logits = as_tensor(logits)
    target = validate_target(target)
    if logits.ndim < 3 or logits.shape[1] < 2 or target.shape != logits.shape[:1] + logits.shape[2:]:
        raise ShapeError('focal_dice_loss', logits.shape, target.shape)

    probs = softmax(logits, axis=1)
    true_class = (probs * one_hot(target, logits.shape[1], axis=1, dtype=logits.dtype)).sum(axis=1)
    foreground = probs[:, FOREGROUND]
    q = Tensor(target, dtype=logits.dtype)

    overlap = (foreground * q).sum()
    total = (foreground + q).sum()
    dice = 1.0 - (2.0 * overlap + cfg.smooth) / (total + cfg.smooth)

    focal = (-((1.0 - true_class) ** cfg.gamma) * log(true_class, floor=cfg.log_floor)).mean()
    return dice + focal


def ds_weights(levels: int) -> List[float]:
    return [2.0 ** -i for i in range(levels)]


def ds_loss(outputs: MultiScaleOutput, target, cfg: LossConfig = None) -> Tensor:
    """
    weighted sum of focal_dice_loss(O^i, G^i) with weights 2^-i, G^i being the full-resolution
    mask nearest-neighbour resized to O^i's extent. without deep supervision only O^0 counts
    """
    cfg = cfg or LossConfig()
    target = validate_target(target)
    heads: Sequence[Tensor] = outputs.outputs if cfg.deep_supervision else outputs.outputs[:1]

    total = None
    for weight, logits in zip(ds_weights(len(heads)), heads):
        term = focal_dice_loss(logits, resize_nearest_array(target, logits.shape[2:]), cfg)
        term = term if weight == 1.0 else term * weight
        total = term if total is None else total + term
    return total
