import itertools
import math

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from hdenseformer import EmptyMaskWarning, HDenseFormerError, ShapeError
from hdenseformer.metrics import CaseMetrics, MetricReport, UNDEFINED, case_metrics, dsc, hd95, jaccard


def _brute_surface(mask: np.ndarray) -> np.ndarray:
    """coordinates of mask voxels with a face neighbour outside the mask or the volume"""
    points = []
    for index in zip(*np.nonzero(mask)):
        for axis, step in itertools.product(range(mask.ndim), (-1, 1)):
            neighbour = list(index)
            neighbour[axis] += step
            if not 0 <= neighbour[axis] < mask.shape[axis] or not mask[tuple(neighbour)]:
                points.append(index)
                break
    return np.array(points, dtype=np.float64)


def _brute_hd95(pred, gt, spacing):
    a, b = _brute_surface(pred) * spacing, _brute_surface(gt) * spacing
    distances = cdist(a, b)
    return float(np.percentile(np.concatenate([distances.min(axis=1), distances.min(axis=0)]), 95))


def _random_pairs(count=200, shape=(8, 8, 8)):
    rng = np.random.default_rng(0)
    for _ in range(count):
        density = rng.uniform(0.1, 0.6)
        pred = rng.random(shape) < density
        gt = rng.random(shape) < density
        spacing = rng.uniform(0.5, 2.0, len(shape))
        yield pred, gt, spacing


def test_overlap_metrics_against_brute_force():
    for pred, gt, _ in _random_pairs():
        intersection = sum(bool(p and g) for p, g in zip(pred.ravel(), gt.ravel()))
        union = sum(bool(p or g) for p, g in zip(pred.ravel(), gt.ravel()))
        assert dsc(pred, gt) == pytest.approx(2 * intersection / (pred.sum() + gt.sum()))
        assert jaccard(pred, gt) == pytest.approx(intersection / union)


def test_dice_jaccard_identity():
    for pred, gt, _ in _random_pairs(1000):
        d, j = dsc(pred, gt), jaccard(pred, gt)
        assert j == pytest.approx(d / (2 - d), abs=1e-9)


def test_hd95_is_symmetric():
    for pred, gt, spacing in _random_pairs(100):
        assert hd95(pred, gt, spacing) == hd95(gt, pred, spacing)


def test_hd95_against_brute_force():
    for pred, gt, spacing in _random_pairs():
        assert hd95(pred, gt, spacing) == pytest.approx(_brute_hd95(pred, gt, spacing), rel=1e-9)


def test_single_voxel_distance():
    pred, gt = np.zeros((8, 8, 8), bool), np.zeros((8, 8, 8), bool)
    pred[1, 2, 2] = True
    gt[4, 2, 2] = True
    assert hd95(pred, gt) == pytest.approx(3.0)
    assert hd95(pred, gt, spacing=(2.0, 1.0, 1.0)) == pytest.approx(6.0)
    assert hd95(pred, gt, spacing=(1.0, 5.0, 5.0)) == pytest.approx(3.0)


def test_identical_masks():
    mask = np.zeros((6, 6), bool)
    mask[1:4, 2:5] = True
    assert case_metrics('a', mask, mask) == CaseMetrics('a', 1.0, 1.0, 0.0)


def test_both_empty():
    empty = np.zeros((4, 4, 4), np.uint8)
    assert dsc(empty, empty) == 1.0
    assert jaccard(empty, empty) == 1.0
    assert hd95(empty, empty) == 0.0


def test_one_empty_mask_gives_undefined_hd95():
    gt = np.zeros((4, 4, 4), np.uint8)
    gt[1, 1, 1] = 1
    with pytest.warns(EmptyMaskWarning):
        value = hd95(np.zeros_like(gt), gt)
    assert math.isnan(value)
    assert dsc(np.zeros_like(gt), gt) == 0.0


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        dsc(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(ShapeError):
        hd95(np.ones((4, 4)), np.ones((4, 4)), spacing=(1.0, 1.0, 1.0))


def _report():
    return MetricReport([
        CaseMetrics('case_000', 0.9, 0.818182, 1.5),
        CaseMetrics('case_001', 0.5, 0.333333, math.nan),
        CaseMetrics('case_002', 0.7, 0.538462, 4.25),
    ])


def test_report_text_round_trip():
    report = _report()
    text = report.to_text()
    lines = text.splitlines()
    assert lines[0] == 'case\tdsc\tji\thd95'
    assert lines[2] == f'case_001\t0.500000\t0.333333\t{UNDEFINED}'
    assert lines[-2].startswith('mean\t0.700000')

    parsed = MetricReport.from_text(text)
    assert [c.case for c in parsed.cases] == ['case_000', 'case_001', 'case_002']
    assert parsed.values('dsc') == [0.9, 0.5, 0.7]
    assert math.isnan(parsed.cases[1].hd95)
    assert parsed.to_text() == text


def test_report_mean_is_the_arithmetic_mean_of_the_rows():
    report = _report()
    assert report.mean('dsc') == pytest.approx(np.mean([0.9, 0.5, 0.7]))
    assert report.std('dsc') == pytest.approx(np.std([0.9, 0.5, 0.7]))
    # undefined rows are left out
    assert report.mean('hd95') == pytest.approx((1.5 + 4.25) / 2)


def test_report_without_header_is_rejected():
    with pytest.raises(HDenseFormerError):
        MetricReport.from_text('case_000\t1\t1\t0\n')


def test_cases_named_like_the_aggregate_rows_survive_a_round_trip():
    report = MetricReport([CaseMetrics('mean', 0.5, 1 / 3, 2.0), CaseMetrics('std', 1.0, 1.0, 0.0)])
    parsed = MetricReport.from_text(report.to_text())
    assert [case.case for case in parsed.cases] == ['mean', 'std']
    assert parsed.mean('dsc') == pytest.approx(0.75)
