from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ShapeError

__all__ = ('ModalityStack', 'pad_to_multiple', 'padding_for')


class ModalityStack(NamedTuple):
    """registered multimodal volume, image is (modalities, *spatial), spacing in mm per spatial axis"""
    image: np.ndarray
    spacing: Tuple[float, ...]
    mask: Optional[np.ndarray] = None
    case_id: str = ''

    @property
    def modalities(self) -> int:
        return self.image.shape[0]

    @property
    def spatial(self) -> Tuple[int, ...]:
        return self.image.shape[1:]

    def validate(self) -> 'ModalityStack':
        if self.image.ndim not in (3, 4):
            raise ShapeError('modality_stack', self.image.shape, hint='expected (modalities, *spatial) with 2 or 3 '
                                                                     'spatial axes')
        if len(self.spacing) != len(self.spatial):
            raise ShapeError('modality_stack', self.image.shape, self.spacing, hint='one spacing value per axis')
        if self.mask is not None and self.mask.shape != self.spatial:
            raise ShapeError('modality_stack', self.image.shape, self.mask.shape, hint='mask must match the image')
        return self

    def padded(self, multiple: int) -> 'ModalityStack':
        """reflect-pads the image (zero-pads the mask) so every spatial extent is a multiple of `multiple`"""
        pad = padding_for(self.spatial, multiple)
        if not any(after for _, after in pad):
            return self
        image = pad_to_multiple(self.image, multiple, leading=1, mode='reflect')
        mask = None if self.mask is None else pad_to_multiple(self.mask, multiple, mode='constant')
        return self._replace(image=image, mask=mask)


def padding_for(spatial: Sequence[int], multiple: int):
    return [(0, -n % multiple) for n in spatial]


def pad_to_multiple(array: np.ndarray, multiple: int, leading: int = 0, mode: str = 'reflect') -> np.ndarray:
    """pads the axes after the first `leading` ones at their far end"""
    pad = [(0, 0)] * leading + padding_for(array.shape[leading:], multiple)
    if mode == 'reflect' and any(after >= n for (_, after), n in zip(pad, array.shape) if after):
        # reflection cannot extend an axis by more than its own length
        mode = 'symmetric' if all(after <= n for (_, after), n in zip(pad, array.shape)) else 'edge'
    return np.pad(array, pad, mode=mode)
