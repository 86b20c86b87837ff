"""
finite-difference verification of the reverse-mode gradients

the checked function is reduced to a scalar as f = sum(out * R) with a fixed
random R, so non-scalar outputs are covered too. every selected component is
perturbed by +-epsilon and the central difference is compared against the
analytic gradient with relative error |a - b| / max(|a|, |b|, 1e-8)
"""
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, TYPE_CHECKING

import numpy as np

from ..exceptions import NonFiniteError
from ..shared import no_grad
from .tensor import Tensor

if TYPE_CHECKING:
    from ..nn.module import Module

__all__ = ('GradCheckReport', 'check_gradients', 'grad_check', 'grad_check_module', 'relative_error')

DENOMINATOR_FLOOR = 1e-8


@dataclass
class GradCheckReport:
    max_relative_error: float
    per_parameter_errors: Dict[str, float]
    passed: bool
    epsilon: float
    tolerance: float
    failure: Optional[str] = None
    checked_components: int = 0

    def __str__(self):
        status = 'PASS' if self.passed else 'FAIL'
        text = (f'{status} max_rel_err={self.max_relative_error:.3e} tol={self.tolerance:.0e} '
                f'eps={self.epsilon:.0e} components={self.checked_components}')
        if self.failure:
            text += f' ({self.failure})'
        return text


def relative_error(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), DENOMINATOR_FLOOR)


def _scalarize(value: Tensor, weights: Optional[np.ndarray]) -> Tensor:
    return value if weights is None else (value * Tensor(weights, dtype=value.dtype)).sum()


def _failed(errors, epsilon, tolerance, reason, checked) -> GradCheckReport:
    return GradCheckReport(max_relative_error=float('inf'), per_parameter_errors=errors, passed=False,
                           epsilon=epsilon, tolerance=tolerance, failure=reason, checked_components=checked)


def check_gradients(function: Callable[[], Tensor], tensors: Mapping[str, Tensor], epsilon: float = 1e-6,
                    tolerance: float = 1e-5, max_components: Optional[int] = None,
                    seed: int = 0) -> GradCheckReport:
    """
    compares analytic and central-difference gradients of `function` w.r.t. every tensor in `tensors`

    `function` takes no arguments and reads the current values of the tensors, the tensors are
    perturbed in place and restored afterwards. run it under `precision('float64')`.
    :param max_components: check at most this many randomly chosen components per tensor
    """
    rng = np.random.default_rng(seed)
    for tensor in tensors.values():
        tensor.requires_grad = True
        tensor.zero_grad()

    errors: Dict[str, float] = {}
    try:
        out = function()
    except (NonFiniteError, ArithmeticError, ValueError) as e:
        return _failed(errors, epsilon, tolerance, f'function raised at the base point: {e}', 0)

    weights = None if out.size == 1 else rng.standard_normal(out.shape)
    objective = _scalarize(out, weights)
    objective.backward()

    checked = 0
    for name, tensor in tensors.items():
        analytic = np.zeros_like(tensor.data) if tensor.grad is None else tensor.grad
        flat = tensor.data.reshape(-1)
        indices = np.arange(flat.size)
        if max_components is not None and flat.size > max_components:
            indices = np.sort(rng.choice(flat.size, size=max_components, replace=False))

        worst = 0.0
        for i in indices:
            original = flat[i]
            values = []
            for step in (epsilon, -epsilon):
                flat[i] = original + step
                try:
                    with no_grad():
                        value = _scalarize(function(), weights).item()
                except (NonFiniteError, ArithmeticError, ValueError) as e:
                    value, reason = float('nan'), str(e)
                else:
                    reason = 'non-finite function value'
                if not np.isfinite(value):
                    flat[i] = original
                    location = f'{name}{[int(j) for j in np.unravel_index(i, tensor.shape)]}'
                    return _failed(errors, epsilon, tolerance, f'{reason} at {location}', checked)
                values.append(value)
            flat[i] = original

            numeric = (values[0] - values[1]) / (2 * epsilon)
            worst = max(worst, float(relative_error(analytic.reshape(-1)[i], numeric)))
            checked += 1
        errors[name] = worst

    max_error = max(errors.values(), default=0.0)
    return GradCheckReport(max_relative_error=max_error, per_parameter_errors=errors, passed=max_error < tolerance,
                           epsilon=epsilon, tolerance=tolerance, checked_components=checked)


def grad_check(function: Callable[[Tensor], Tensor], point: Tensor, epsilon: float = 1e-6,
               tolerance: float = 1e-5, **kwargs) -> GradCheckReport:
    """
    checks d function(point) / d point

    >>> with precision('float64'):
    >>>     report = grad_check(lambda x: (x * x).sum() * 0.5, Tensor([1., 2., 3.]))
    """
    return check_gradients(lambda: function(point), {'x': point}, epsilon=epsilon, tolerance=tolerance, **kwargs)


def grad_check_module(function: Callable[[], Tensor], module: 'Module', inputs: Optional[Mapping[str, Tensor]] = None,
                      epsilon: float = 1e-6, tolerance: float = 1e-4, max_components: Optional[int] = 8,
                      seed: int = 0) -> GradCheckReport:
    """checks every named parameter of `module` (plus optional named inputs), subsampling large tensors"""
    tensors = dict(inputs or {})
    tensors.update(module.named_parameters())
    report = check_gradients(function, tensors, epsilon=epsilon, tolerance=tolerance,
                             max_components=max_components, seed=seed)
    module.zero_grad()
    return report
