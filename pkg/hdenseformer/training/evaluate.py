import math
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..data import VolumeDataset, list_cases
from ..database import add_case_metrics
from ..enums import Event
from ..events import trigger_event
from ..exceptions import HDenseFormerError
from ..metrics import CaseMetrics, MetricReport, UNDEFINED, case_metrics
from ..model import HDenseFormer
from .checkpoint import load_checkpoint, restore_model
from .trainer import check_compatible

__all__ = ('evaluate', 'evaluate_model', 'evaluate_predictions', 'average_reports', 'format_fold_summary',
           'write_reports')

Predictor = Callable[[np.ndarray], np.ndarray]


def evaluate_predictions(dataset: VolumeDataset, predictor: Predictor, verbose: bool = False) -> MetricReport:
    """
    scores `predictor(image) -> mask` on every case of `dataset`, using the case's voxel spacing

    an empty prediction gives an undefined hd95 (and an EmptyMaskWarning), dsc and ji are still computed
    """
    report = MetricReport()
    for i in range(len(dataset)):
        stack = dataset[i]
        metrics = case_metrics(stack.case_id, predictor(stack.image), stack.mask, stack.spacing)
        report.add(metrics)
        if verbose:
            print(f'[EVAL] {_format_case(metrics)}')
        trigger_event(Event.on_case_evaluated, metrics)
    return report


def evaluate_model(model: HDenseFormer, dataset: VolumeDataset, verbose: bool = False) -> MetricReport:
    check_compatible(model.cfg, dataset)
    return evaluate_predictions(dataset, lambda image: model.predict(image[np.newaxis])[0], verbose)


def evaluate(checkpoints: Sequence, data_dir, report_path=None, verbose: bool = True,
             db_path=None) -> List[MetricReport]:
    """
    evaluates each checkpoint (one per fold) on every case under `data_dir`

    a single checkpoint writes its MetricReport text to `report_path`. several checkpoints write
    one report per fold, each preceded by a `# <checkpoint>` line, and a final
    `# average over N folds` block with the mean and std of the fold means
    """
    if isinstance(checkpoints, (str, Path)):
        checkpoints = [checkpoints]
    if not checkpoints:
        raise HDenseFormerError('evaluate needs at least one checkpoint')

    dataset = VolumeDataset(list_cases(data_dir))
    reports = []
    for path in checkpoints:
        model = restore_model(load_checkpoint(path), path)
        if verbose:
            print(f'[EVAL] checkpoint {path} on {len(dataset)} cases')
        report = evaluate_model(model, dataset, verbose)
        reports.append(report)
        if verbose:
            print(f'[EVAL] {report.format_summary()}')
        if db_path is not None:
            add_case_metrics(db_path, str(path), report)

    if len(reports) > 1 and verbose:
        print(f'[EVAL] average over {len(reports)} folds: {format_fold_summary(average_reports(reports))}')

    if report_path is not None:
        write_reports(report_path, checkpoints, reports)
    return reports


def write_reports(report_path, checkpoints: Sequence, reports: Sequence[MetricReport]) -> Path:
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    if len(reports) == 1:
        report_path.write_text(reports[0].to_text())
        return report_path

    blocks =[f'# {path}\n{report.to_text()}' for path, report in zip(checkpoints, reports)]
    lines = ['\t'.join(('metric', 'mean', 'std'))]
    lines.extend('\t'.join((metric, _format(mean), _format(std)))
                 for metric, (mean, std) in average_reports(reports).items())
    blocks.append(f'# average over {len(reports)} folds\n' + '\n'.join(lines) + '\n')
    report_path.write_text('\n'.join(blocks))
    return report_path


def average_reports(reports: Iterable[MetricReport]) -> Dict[str, Tuple[float, float]]:
    """mean and std over the folds of each fold's mean, undefined fold means are skipped"""
    reports = list(reports)
    out = {}
    for metric in MetricReport.METRICS:
        means = np.array([r.mean(metric) for r in reports], dtype=np.float64)
        means = means[~np.isnan(means)]
        out[metric] = (float(means.mean()), float(means.std())) if means.size else (math.nan, math.nan)
    return out


def format_fold_summary(averaged: Dict[str, Tuple[float, float]]) -> str:
    return '  '.join(f'{metric}={_format(mean)}±{_format(std)}' for metric, (mean, std) in averaged.items())


def _format(value: Optional[float]) -> str:
    return UNDEFINED if value is None or math.isnan(value) else f'{value:.6f}'


def _format_case(metrics: CaseMetrics) -> str:
    return (f'{metrics.case}: dsc={_format(metrics.dsc)} ji={_format(metrics.jaccard)} '
            f'hd95={_format(metrics.hd95)}')
