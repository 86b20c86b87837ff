from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigError, HDenseFormerError, ShapeError
from .augment import augment_pair
from .modality import ModalityStack
from .mvol import load_image, load_mask
from .synth import EXTENT_MULTIPLE, IMAGE_FILE, MASK_FILE

__all__ = ('CaseFiles', 'Batch', 'VolumeDataset', 'list_cases', 'kfold_split', 'iterate_batches')


class CaseFiles(NamedTuple):
    case_id: str
    image_path: Path
    mask_path: Path


class Batch(NamedTuple):
    index: int
    case_ids: Tuple[str, ...]
    images: np.ndarray
    masks: np.ndarray


def list_cases(data_dir) -> List[CaseFiles]:
    """every sub-folder of `data_dir` holding an image.mvol / mask.mvol pair, sorted by name"""
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise HDenseFormerError(f'dataset folder {data_dir} does not exist')
    cases = [CaseFiles(folder.name, folder / IMAGE_FILE, folder / MASK_FILE)
             for folder in sorted(data_dir.iterdir())
             if (folder / IMAGE_FILE).is_file() and (folder / MASK_FILE).is_file()]
    if not cases:
        raise HDenseFormerError(f'no cases ({IMAGE_FILE} + {MASK_FILE}) found under {data_dir}')
    return cases


def kfold_split(cases: Sequence, folds: int, fold: Optional[int], seed: int) -> Tuple[list, list]:
    """
    shuffles the cases with `seed` and holds out fold `fold` of `folds` for validation,
    `fold=None` trains and validates on every case
    """
    cases = list(cases)
    if fold is None:
        return cases, cases
    if folds < 2:
        raise ConfigError('folds', f'cross-validation needs at least 2 folds, got {folds}')
    if not 0 <= fold < folds:
        raise ConfigError('fold', f'must lie in [0, {folds}), got {fold}')
    if len(cases) < folds:
        raise ConfigError('folds', f'{len(cases)} cases cannot fill {folds} folds')

    order = np.random.default_rng(seed).permutation(len(cases))
    parts = np.array_split(order, folds)
    held_out = set(parts[fold].tolist())
    train = [cases[i] for i in range(len(cases)) if i not in held_out]
    val = [cases[i] for i in sorted(held_out)]
    return train, val


class VolumeDataset:
    """loads cases on first access and keeps them in memory, padded to the patch multiple"""

    def __init__(self, cases: Sequence[CaseFiles], multiple: int = EXTENT_MULTIPLE):
        self.cases = list(cases)
        self.multiple = multiple
        self._cache: Dict[str, ModalityStack] = {}

    def __len__(self):
        return len(self.cases)

    def __getitem__(self, index: int) -> ModalityStack:
        case = self.cases[index]
        if case.case_id not in self._cache:
            image = load_image(case.image_path)
            mask = load_mask(case.mask_path)
            if mask.data.shape != image.dims:
                raise ShapeError('dataset', image.data.shape, mask.data.shape, hint=f'case {case.case_id}')
            stack = ModalityStack(image.data, image.spacing, mask.data, case.case_id).validate()
            self._cache[case.case_id] = stack.padded(self.multiple)
        return self._cache[case.case_id]

    @property
    def modalities(self) -> int:
        return self[0].modalities

    @property
    def spatial(self) -> Tuple[int, ...]:
        return self[0].spatial


def _load_batch(dataset: VolumeDataset, index: int, members: Sequence[int], seed: int, epoch: int,
                augment: bool, flip: bool, rotate: bool) -> Batch:
    rng = np.random.default_rng([seed, epoch, index])
    images, masks, ids = [], [], []
    for i in members:
        stack = dataset[int(i)]
        image, mask = stack.image, stack.mask
        if augment:
            image, mask = augment_pair(image, mask, rng, flip=flip, rotate=rotate)
        images.append(image)
        masks.append(mask)
        ids.append(stack.case_id)
    if len({m.shape for m in masks}) != 1:
        raise ShapeError('batch', *(m.shape for m in masks), hint='cases in a batch must share extents')
    return Batch(index, tuple(ids), np.stack(images), np.stack(masks))


def iterate_batches(dataset: VolumeDataset, batch_size: int, seed: int = 0, epoch: int = 0, shuffle: bool = True,
                    augment: bool = False, flip: bool = True, rotate: bool = True,
                    prefetch: bool = False) -> Iterator[Batch]:
    """
    yields batches of one epoch, the order and augmentation draw only from (seed, epoch, batch index)

    with `prefetch` the next batch is assembled on one background thread while the caller
    works on the current one, the produced batches are the same either way
    """
    if batch_size < 1:
        raise ConfigError('batch_size', f'must be >= 1, got {batch_size}')
    order = np.random.default_rng([seed, epoch]).permutation(len(dataset)) if shuffle else np.arange(len(dataset))
    groups = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]

    if not prefetch:
        for index, members in enumerate(groups):
            yield _load_batch(dataset, index, members, seed, epoch, augment, flip, rotate)
        return

    with ThreadPoolExecutor(max_workers=1) as pool:
        pending = None
        for index, members in enumerate(groups):
            future = pool.submit(_load_batch, dataset, index, members, seed, epoch, augment, flip, rotate)
            if pending is not None:
                yield pending.result()
            pending = future
        if pending is not None:
            yield pending.result()
