"""
flips and in-plane 90 degree rotations, applied identically to image and mask

rotations stay on the voxel grid so masks remain binary and aligned
"""
from typing import Tuple

import numpy as np

__all__ = ('augment_pair', 'random_flip', 'random_rot90', 'IN_PLANE_AXES')

# spatial axes spanning the rotation plane
IN_PLANE_AXES = (0, 1)


def random_flip(image: np.ndarray, mask: np.ndarray, rng: np.random.Generator, p: float = 0.5):
    """flips every spatial axis independently with probability `p`, image is (C, *spatial)"""
    for axis in range(mask.ndim):
        if rng.random() < p:
            image = np.flip(image, axis=axis + 1)
            mask = np.flip(mask, axis=axis)
    return image, mask


def random_rot90(image: np.ndarray, mask: np.ndarray, rng: np.random.Generator):
    a, b = IN_PLANE_AXES
    # quarter turns would change the shape of a non-square plane
    k = int(rng.integers(4)) if mask.shape[a] == mask.shape[b] else 2 * int(rng.integers(2))
    if k:
        image = np.rot90(image, k=k, axes=(a + 1, b + 1))
        mask = np.rot90(mask, k=k, axes=(a, b))
    return image, mask


def augment_pair(image: np.ndarray, mask: np.ndarray, rng: np.random.Generator, flip: bool = True,
                 rotate: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    if rotate:
        image, mask = random_rot90(image, mask, rng)
    if flip:
        image, mask = random_flip(image, mask, rng)
    return np.ascontiguousarray(image), np.ascontiguousarray(mask)
