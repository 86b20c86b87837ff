"""
synthetic multimodal phantoms

each case is one ellipsoidal lesion. modality 0 mimics a morphological scan
(soft tissue texture, lesion slightly denser than its surroundings), modality 1
a functional one (low background, smooth hot spot over the lesion), further
modalities alternate between the two with other contrasts
"""
from pathlib import Path
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy import ndimage

from ..exceptions import ConfigError, HDenseFormerError
from .modality import ModalityStack
from .mvol import save_image, save_mask

__all__ = ('SynthCase', 'synth_mask', 'synth_modalities', 'synth_case', 'synth_dataset', 'FOREGROUND_RANGE',
           'TARGET_FRACTION_RANGE', 'IMAGE_FILE', 'MASK_FILE', 'EXTENT_MULTIPLE')

# accepted foreground fraction, a draw outside it is resampled
FOREGROUND_RANGE = (0.005, 0.10)
TARGET_FRACTION_RANGE = (0.01, 0.06)
EXTENT_MULTIPLE = 16
IMAGE_FILE = 'image.mvol'
MASK_FILE = 'mask.mvol'
_MAX_ATTEMPTS = 100


class SynthCase(NamedTuple):
    case_id: str
    image_path: Path
    mask_path: Path
    foreground_fraction: float


def _unit_volume(ndim: int) -> float:
    return np.pi if ndim == 2 else 4.0 / 3.0 * np.pi


def synth_mask(rng: np.random.Generator, shape: Sequence[int]) -> np.ndarray:
    """random axis-aligned ellipsoid covering a fraction of the volume within FOREGROUND_RANGE"""
    shape = tuple(shape)
    nd = len(shape)
    grid = np.meshgrid(*(np.arange(n, dtype=np.float64) for n in shape), indexing='ij')
    for _ in range(_MAX_ATTEMPTS):
        fraction = rng.uniform(*TARGET_FRACTION_RANGE)
        radius = (fraction * np.prod(shape) / _unit_volume(nd)) ** (1.0 / nd)
        aspect = rng.uniform(0.7, 1.3, size=nd)
        axes = radius * aspect / np.prod(aspect) ** (1.0 / nd)
        axes = np.minimum(axes, (np.asarray(shape) - 2) / 2.0)
        low, high = axes, np.asarray(shape) - 1 - axes
        center = rng.uniform(low, np.maximum(high, low))

        distance = sum(((g - c) / a) ** 2 for g, c, a in zip(grid, center, axes))
        mask = (distance <= 1.0).astype(np.uint8)
        achieved = mask.mean()
        if FOREGROUND_RANGE[0] <= achieved <= FOREGROUND_RANGE[1]:
            return mask
    raise HDenseFormerError(f'could not draw a lesion for a volume of shape {shape}, use larger extents')


def synth_modalities(rng: np.random.Generator, mask: np.ndarray, modalities: int,
                     noise: float = 0.1) -> np.ndarray:
    """(modalities, *spatial) float32 intensities, each modality z-score normalized"""
    lesion = mask.astype(np.float64)
    channels = []
    for m in range(modalities):
        texture = ndimage.gaussian_filter(rng.standard_normal(mask.shape), sigma=2.0)
        if m % 2 == 0:
            contrast = 0.6 if m % 4 == 0 else -0.5
            field = 0.5 * texture / (texture.std() + 1e-8) + contrast * ndimage.gaussian_filter(lesion, sigma=0.7)
        else:
            uptake = 2.0 if m % 4 == 1 else 1.2
            field = 0.1 + 0.05 * texture + uptake * ndimage.gaussian_filter(lesion, sigma=1.5)
        field = field + noise * rng.standard_normal(mask.shape)
        channels.append((field - field.mean()) / (field.std() + 1e-8))
    return np.stack(channels).astype(np.float32)


def synth_case(seed: int, index: int, shape: Sequence[int], modalities: int,
               spacing: Sequence[float] = None) -> ModalityStack:
    """case `index` of the dataset with `seed`, drawn from its own stream so cases are independent of n_cases"""
    shape = tuple(int(n) for n in shape)
    if len(shape) not in (2, 3) or any(n < EXTENT_MULTIPLE or n % EXTENT_MULTIPLE for n in shape):
        raise ConfigError('extents', f'{shape} must be 2 or 3 positive multiples of {EXTENT_MULTIPLE}, '
                                     f'pad the volumes up to the next multiple')
    if modalities < 1:
        raise ConfigError('modalities', f'must be >= 1, got {modalities}')

    rng = np.random.default_rng([seed, index])
    mask = synth_mask(rng, shape)
    image = synth_modalities(rng, mask, modalities)
    spacing = tuple(float(s) for s in (spacing or (1.0,) * len(shape)))
    return ModalityStack(image=image, spacing=spacing, mask=mask, case_id=f'case_{index:03d}')


def synth_dataset(out_dir, n_cases: int, shape: Sequence[int], modalities: int, seed: int,
                  spacing: Sequence[float] = None, verbose: bool = False) -> List[SynthCase]:
    """writes <out_dir>/<case_id>/image.mvol and mask.mvol for every case"""
    if n_cases < 1:
        raise ConfigError('n_cases', f'must be >= 1, got {n_cases}')
    out_dir = Path(out_dir)
    out = []
    for i in range(n_cases):
        case = synth_case(seed, i, shape, modalities, spacing)
        folder = out_dir / case.case_id
        folder.mkdir(parents=True, exist_ok=True)
        save_image(folder / IMAGE_FILE, case.image, case.spacing)
        save_mask(folder / MASK_FILE, case.mask, case.spacing)
        fraction = float(case.mask.mean())
        out.append(SynthCase(case.case_id, folder / IMAGE_FILE, folder / MASK_FILE, fraction))
        if verbose:
            print(f'[SYNTH] {case.case_id}: shape={"x".join(map(str, shape))} modalities={modalities} '
                  f'foreground={fraction:.4f}')
    return out
