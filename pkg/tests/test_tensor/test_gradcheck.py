import numpy as np
import pytest

from hdenseformer import precision
from hdenseformer.tensor import Tensor, check_gradients, grad_check, log, relative_error


def _wrong_square(x: Tensor) -> Tensor:
    # forward is x^2, backward claims 3x
    return Tensor.from_op(x.data ** 2, (x,), lambda g: (g * 3 * x.data,), 'wrong_square')


def test_half_square_passes():
    with precision('float64'):
        report = grad_check(lambda x: (x * x).sum() * 0.5, Tensor([1., 2., 3.]))
    assert report.passed
    assert report.max_relative_error < 1e-7
    assert report.checked_components == 3


def test_wrong_backward_is_detected():
    with precision('float64'):
        report = grad_check(lambda x: _wrong_square(x).sum(), Tensor([1., -2., 0.5]))
    assert not report.passed
    assert report.max_relative_error == pytest.approx(1 / 3, rel=1e-4)


def test_non_scalar_output_is_reduced():
    with precision('float64'):
        x = Tensor(np.random.default_rng(3).standard_normal((3, 4)))
        report = grad_check(lambda t: t * t, x)
    assert report.passed


def test_non_finite_perturbation_reports_location():
    with precision('float64'), np.errstate(invalid='ignore', divide='ignore'):
        x = Tensor([1.0, 1e-7])
        report = check_gradients(lambda: log(x).sum(), {'x': x})
    assert not report.passed
    assert 'x[1]' in report.failure
    # the perturbed value was restored
    assert x.data[1] == 1e-7


def test_base_point_failure():
    with precision('float64'), np.errstate(divide='ignore'):
        x = Tensor([0.0])
        report = check_gradients(lambda: log(x).sum(), {'x': x})
    assert not report.passed
    assert 'base point' in report.failure


def test_max_components_limits_the_checked_entries():
    with precision('float64'):
        x = Tensor(np.ones(50))
        report = check_gradients(lambda: (x * x).sum(), {'x': x}, max_components=7)
    assert report.checked_components == 7


def test_relative_error_floor():
    assert relative_error(np.array(0.0), np.array(0.0)) == 0.0
    assert relative_error(np.array(1.0), np.array(0.5)) == 0.5
