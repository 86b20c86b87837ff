"""
overlap and surface-distance metrics for binary masks

hd95 pools the distances of both surfaces to each other and takes the linearly
interpolated 95th percentile, distances are in millimetres via the voxel spacing
"""
import math
import warnings
from typing import Iterable, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import ndimage

from .exceptions import EmptyMaskWarning, HDenseFormerError, ShapeError

__all__ = ('dsc', 'jaccard', 'surface_voxels', 'surface_distances', 'hd95', 'CaseMetrics', 'MetricReport',
           'case_metrics', 'UNDEFINED')

UNDEFINED = 'undefined'
HD_PERCENTILE = 95


def _binary_pair(pred, gt, op: str):
    pred, gt = np.asarray(pred).astype(bool), np.asarray(gt).astype(bool)
    if pred.shape != gt.shape:
        raise ShapeError(op, pred.shape, gt.shape)
    return pred, gt


def dsc(pred, gt) -> float:
    pred, gt = _binary_pair(pred, gt, 'dsc')
    size = int(pred.sum()) + int(gt.sum())
    if size == 0:
        return 1.0
    return 2.0 * int(np.logical_and(pred, gt).sum()) / size


def jaccard(pred, gt) -> float:
    pred, gt = _binary_pair(pred, gt, 'jaccard')
    union = int(np.logical_or(pred, gt).sum())
    if union == 0:
        return 1.0
    return int(np.logical_and(pred, gt).sum()) / union


def surface_voxels(mask: np.ndarray) -> np.ndarray:
    """voxels of the mask with at least one face neighbour outside it (the volume border counts as outside)"""
    mask = np.asarray(mask).astype(bool)
    structure = ndimage.generate_binary_structure(mask.ndim, 1)
    return mask & ~ndimage.binary_erosion(mask, structure=structure, border_value=0)


def surface_distances(source: np.ndarray, target: np.ndarray, spacing: Sequence[float]) -> np.ndarray:
    """distance of every surface voxel of `source` to the nearest surface voxel of `target`"""
    target_surface = surface_voxels(target)
    distance = ndimage.distance_transform_edt(~target_surface, sampling=spacing)
    return distance[surface_voxels(source)]


def hd95(pred, gt, spacing: Optional[Sequence[float]] = None) -> float:
    """
    95th percentile Hausdorff distance

    both masks empty -> 0.0, exactly one empty -> nan plus an EmptyMaskWarning
    """
    pred, gt = _binary_pair(pred, gt, 'hd95')
    spacing = tuple(float(s) for s in (spacing if spacing is not None else (1.0,) * pred.ndim))
    if len(spacing) != pred.ndim:
        raise ShapeError('hd95', pred.shape, spacing, hint='one spacing value per axis')

    pred_empty, gt_empty = not pred.any(), not gt.any()
    if pred_empty and gt_empty:
        return 0.0
    if pred_empty or gt_empty:
        warnings.warn(f'hd95 is {UNDEFINED} when one mask is empty '
                      f'(prediction empty: {pred_empty}, ground truth empty: {gt_empty})', EmptyMaskWarning)
        return math.nan

    pooled = np.concatenate([surface_distances(pred, gt, spacing), surface_distances(gt, pred, spacing)])
    return float(np.percentile(pooled, HD_PERCENTILE))


class CaseMetrics(NamedTuple):
    case: str
    dsc: float
    jaccard: float
    hd95: float


def case_metrics(case: str, pred, gt, spacing: Optional[Sequence[float]] = None) -> CaseMetrics:
    return CaseMetrics(case, dsc(pred, gt), jaccard(pred, gt), hd95(pred, gt, spacing))


def _format(value: float) -> str:
    return UNDEFINED if math.isnan(value) else f'{value:.6f}'


def _parse(value: str) -> float:
    return math.nan if value == UNDEFINED else float(value)


def _mean_std(values: Iterable[float]):
    values = np.asarray(list(values), dtype=np.float64)
    values = values[~np.isnan(values)]
    if not values.size:
        return math.nan, math.nan
    return float(values.mean()), float(values.std())


class MetricReport:
    """
    per-case metric rows plus mean / std aggregates

    the text form is tab separated: a header, one row per case, then `mean` and `std`
    rows. values use 6 decimals, an undefined hd95 is written as `undefined` and is
    left out of the aggregates
    """
    COLUMNS = ('case', 'dsc', 'ji', 'hd95')
    METRICS = ('dsc', 'jaccard', 'hd95')

    def __init__(self, cases: Iterable[CaseMetrics] = ()):
        self.cases: List[CaseMetrics] = list(cases)

    def add(self, case: CaseMetrics):
        self.cases.append(case)

    def values(self, metric: str) -> List[float]:
        return [getattr(case, metric) for case in self.cases]

    def mean(self, metric: str) -> float:
        return _mean_std(self.values(metric))[0]

    def std(self, metric: str) -> float:
        return _mean_std(self.values(metric))[1]

    def summary(self) -> dict:
        return {metric: _mean_std(self.values(metric)) for metric in self.METRICS}

    def to_text(self) -> str:
        lines = ['\t'.join(self.COLUMNS)]
        for case in self.cases:
            lines.append('\t'.join((case.case, _format(case.dsc), _format(case.jaccard), _format(case.hd95))))
        lines.append('\t'.join(['mean'] + [_format(self.mean(m)) for m in self.METRICS]))
        lines.append('\t'.join(['std'] + [_format(self.std(m)) for m in self.METRICS]))
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str) -> 'MetricReport':
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines or tuple(lines[0].split('\t')) != cls.COLUMNS:
            raise HDenseFormerError('metric report is missing its header row')
        rows = []
        for line in lines[1:]:
            parts = line.split('\t')
            if len(parts) != len(cls.COLUMNS):
                raise HDenseFormerError(f'malformed metric report row: {line!r}')
            rows.append(parts)
        # the aggregates are always the last two rows, a case may be called `mean` too
        if [parts[0] for parts in rows[-2:]] == ['mean', 'std']:
            rows = rows[:-2]
        report = cls()
        for parts in rows:
            report.add(CaseMetrics(parts[0], *map(_parse, parts[1:])))
        return report

    def format_summary(self) -> str:
        return '  '.join(f'{metric}={_format(mean)}±{_format(std)}' for metric, (mean, std) in self.summary().items())

    def __len__(self):
        return len(self.cases)
