"""
gradient verification suites run by the `gradcheck` command

    primitives  every tensor primitive on random inputs, 20 seeds       tol 1e-5
    dct         one densely connected block, d=16 g=8 over 5 tokens     tol 1e-4
    mpe         2d multi-path embedding, 32x32 with 2 modalities        tol 1e-4
    losses      focal+dice and the deep-supervision aggregate           tol 1e-4
    model       shrunken 3d model, 16^3 with 2 modalities, depth 1      tol 1e-3

everything runs in float64
"""
import time
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from .backbone import MultiScaleOutput
from .dct import DCTBlock, DCTConfig
from .enums import Mode
from .exceptions import ConfigError
from .loss import LossConfig, ds_loss, focal_dice_loss
from .model import ModelConfig, build_model
from .mpe import MPEConfig, MultiPathEmbedding
from .shared import precision
from .tensor import (GradCheckReport, Tensor, check_gradients, concat, conv, conv_transpose, div, exp, gelu,
                     grad_check_module, instance_norm, layer_norm, linear, log, matmul, relu, resize, softmax,
                     split, upsample)
from .tensor import max as tensor_max

__all__ = ('SuiteResult', 'SUITES', 'SUITE_TOLERANCES', 'PRIMITIVE_SEEDS', 'run_suite', 'run_suites',
           'primitive_cases')

PRIMITIVE_SEEDS = 20
SUITE_TOLERANCES = {'primitives': 1e-5, 'dct': 1e-4, 'mpe': 1e-4, 'losses': 1e-4, 'model': 1e-3}


class SuiteResult(NamedTuple):
    name: str
    reports: Dict[str, GradCheckReport]
    seconds: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports.values())

    @property
    def max_relative_error(self) -> float:
        return max((r.max_relative_error for r in self.reports.values()), default=0.0)

    @property
    def failures(self) -> Dict[str, GradCheckReport]:
        return {name: r for name, r in self.reports.items() if not r.passed}

    def __str__(self):
        return (f'suite={self.name} checks={len(self.reports)} max_rel_err={self.max_relative_error:.3e} '
                f'tol={SUITE_TOLERANCES[self.name]:.0e} time={self.seconds:.1f}s '
                f'{"PASS" if self.passed else "FAIL"}')


# (inputs, function of those inputs) per primitive
PrimitiveCase = Tuple[Dict[str, np.ndarray], Callable[..., Tensor]]


def _positive(rng, shape, low=0.5):
    return low + np.abs(rng.standard_normal(shape))


def primitive_cases(rng: np.random.Generator) -> Dict[str, PrimitiveCase]:
    normal = rng.standard_normal
    column_weights = Tensor(normal(4))
    return {
        'add': ({'a': normal((3, 4)), 'b': normal((4,))}, lambda a, b: a + b),
        'sub': ({'a': normal((3, 4)), 'b': normal((3, 1))}, lambda a, b: a - b),
        'mul': ({'a': normal((2, 3, 4)), 'b': normal((3, 4))}, lambda a, b: a * b),
        'div': ({'a': normal((3, 4)), 'b': _positive(rng, (3, 4))}, div),
        'neg': ({'a': normal((5,))}, lambda a: -a),
        'pow': ({'a': _positive(rng, (3, 4))}, lambda a: a ** 2.5),
        'exp': ({'a': normal((3, 4))}, exp),
        'log': ({'a': _positive(rng, (3, 4))}, log),
        'relu': ({'a': normal((4, 5))}, relu),
        'gelu': ({'a': normal((4, 5))}, gelu),
        'matmul': ({'a': normal((2, 3, 4)), 'b': normal((4, 5))}, matmul),
        'linear': ({'x': normal((2, 3, 4)), 'w': normal((5, 4)), 'b': normal((5,))}, linear),
        'reshape': ({'a': normal((2, 6))}, lambda a: a.reshape(3, -1) * Tensor(np.arange(12.).reshape(3, 4))),
        'transpose': ({'a': normal((2, 3, 4))}, lambda a: a.transpose(2, 0, 1)),
        'getitem': ({'a': normal((4, 5))}, lambda a: a[1:3, ::2]),
        'concat': ({'a': normal((2, 3)), 'b': normal((2, 2))}, lambda a, b: concat([a, b], axis=1)),
        'split': ({'a': normal((2, 5))}, lambda a: concat([p * (i + 1.0) for i, p in enumerate(split(a, (2, 3), 1))],
                                                          axis=1)),
        'sum': ({'a': normal((3, 4))}, lambda a: a.sum(axis=0) * column_weights),
        'mean': ({'a': normal((3, 4, 2))}, lambda a: a.mean(axis=(1, 2), keepdims=True)),
        'max': ({'a': normal((4, 6))}, lambda a: tensor_max(a, axis=1)),
        'softmax': ({'a': normal((3, 5))}, lambda a: softmax(a, axis=-1)),
        'layer_norm': ({'x': normal((2, 3, 6)), 'w': _positive(rng, (6,)), 'b': normal((6,))}, layer_norm),
        'instance_norm': ({'x': normal((2, 3, 4, 4)), 'w': _positive(rng, (3,)), 'b': normal((3,))},
                          instance_norm),
        'conv': ({'x': normal((2, 2, 6, 6)), 'w': normal((3, 2, 3, 3)), 'b': normal((3,))},
                 lambda x, w, b: conv(x, w, b, stride=2, padding=1)),
        'conv3d': ({'x': normal((1, 2, 4, 4, 4)), 'w': normal((2, 2, 3, 3, 3))},
                   lambda x, w: conv(x, w, padding=1)),
        'conv_transpose': ({'x': normal((2, 3, 3, 3)), 'w': normal((3, 2, 2, 2)), 'b': normal((2,))},
                           lambda x, w, b: conv_transpose(x, w, b, stride=2)),
        'resize': ({'x': normal((1, 2, 3, 5))}, lambda x: resize(x, (7, 4))),
        'upsample': ({'x': normal((1, 2, 2, 2, 2))}, lambda x: upsample(x, 2)),
    }


def _primitives() -> Dict[str, GradCheckReport]:
    reports = {}
    for seed in range(PRIMITIVE_SEEDS):
        rng = np.random.default_rng(seed)
        for name, (inputs, function) in primitive_cases(rng).items():
            tensors = {key: Tensor(value) for key, value in inputs.items()}
            reports[f'{name}[seed={seed}]'] = check_gradients(
                lambda: function(*tensors.values()), tensors, tolerance=SUITE_TOLERANCES['primitives'], seed=seed)
    return reports


def _dct() -> Dict[str, GradCheckReport]:
    rng = np.random.default_rng(0)
    block = DCTBlock(DCTConfig(token_dim=16, growth=8, layers_per_block=4, heads=2), rng)
    x = Tensor(rng.standard_normal((5, 16)))
    return {'dct_block': grad_check_module(lambda: block(x), block, {'x': x}, tolerance=SUITE_TOLERANCES['dct'])}


def _mpe() -> Dict[str, GradCheckReport]:
    rng = np.random.default_rng(0)
    cfg = MPEConfig(modalities=2, input_shape=(32, 32), token_dim=16, fused_channels=8, dct_depth=1, growth=8,
                    layers_per_block=2, heads=2, encoder_channels=(4, 4, 8, 8))
    mpe = MultiPathEmbedding(cfg, rng)
    x = Tensor(rng.standard_normal((1, 2, 32, 32)))

    def features():
        out = mpe(x)
        return concat([out[level].reshape(-1) for level in sorted(out)], axis=0)

    return {'mpe': grad_check_module(features, mpe, {'x': x}, tolerance=SUITE_TOLERANCES['mpe'], max_components=6)}


def _losses() -> Dict[str, GradCheckReport]:
    rng = np.random.default_rng(0)
    tolerance = SUITE_TOLERANCES['losses']
    target = (rng.random((2, 8, 8)) < 0.3).astype(np.uint8)
    reports = {}
    for gamma in (0.0, 2.0):
        cfg = LossConfig(gamma=gamma)
        logits = Tensor(rng.standard_normal((2, 2, 8, 8)))
        reports[f'focal_dice[gamma={gamma:g}]'] = check_gradients(
            lambda: focal_dice_loss(logits, target, cfg), {'logits': logits}, tolerance=tolerance)

    heads = {f'O{i}': Tensor(rng.standard_normal((2, 2) + (16 // 2 ** i,) * 2)) for i in range(4)}
    big_target = (rng.random((2, 16, 16)) < 0.3).astype(np.uint8)
    for deep in (True, False):
        cfg = LossConfig(deep_supervision=deep)
        reports[f'ds_loss[deep_supervision={deep}]'] = check_gradients(
            lambda: ds_loss(MultiScaleOutput(list(heads.values())), big_target, cfg), heads, tolerance=tolerance)
    return reports


def _model() -> Dict[str, GradCheckReport]:
    rng = np.random.default_rng(0)
    cfg = ModelConfig(mode=Mode.THREE_D, in_channels=2, input_shape=(16, 16, 16), embed_dim=8, fused_channels=4,
                      growth=4, layers_per_block=2, heads=2, dct_depth=1, channels=(2, 4, 4, 8))
    model = build_model(cfg, seed=0)
    x = Tensor(rng.standard_normal((1, 2, 16, 16, 16)))
    target = (rng.random((1, 16, 16, 16)) < 0.3).astype(np.uint8)
    report = grad_check_module(lambda: ds_loss(model(x), target), model, {'x': x},
                               tolerance=SUITE_TOLERANCES['model'], max_components=4)
    return {'model': report}


SUITES: Dict[str, Callable[[], Dict[str, GradCheckReport]]] = {
    'primitives': _primitives,
    'dct': _dct,
    'mpe': _mpe,
    'losses': _losses,
    'model': _model,
}


def run_suite(name: str, verbose: bool = False) -> SuiteResult:
    if name not in SUITES:
        raise ConfigError('suite', f'unknown gradient suite {name!r}, expected one of {list(SUITES)}')
    start = time.perf_counter()
    with precision('float64'):
        reports = SUITES[name]()
    result = SuiteResult(name, reports, time.perf_counter() - start)
    if verbose:
        print(f'[GRADCHECK] {result}')
        for check, report in result.failures.items():
            print(f'[GRADCHECK]   {check}: {report}')
    return result


def run_suites(names: Optional[Iterable[str]] = None, verbose: bool = False) -> List[SuiteResult]:
    return [run_suite(name, verbose) for name in (names or SUITES)]
