import numpy as np
import pytest

from hdenseformer import ConfigError, InvalidLabelError, ShapeError, precision
from hdenseformer.backbone import MultiScaleOutput
from hdenseformer.gradcheck_suites import run_suite
from hdenseformer.loss import LossConfig, ds_loss, ds_weights, focal_dice_loss
from hdenseformer.tensor import Tensor, resize_nearest_array


def _logits_from_foreground(p: np.ndarray) -> Tensor:
    """two-class logits whose softmax foreground probability is exactly p"""
    return Tensor(np.stack([np.log(1 - p), np.log(p)])[np.newaxis])


def test_hand_computed_example():
    p = np.array([[0.9, 0.1], [0.8, 0.2]])
    target = np.array([[[1, 0], [1, 0]]], dtype=np.uint8)
    with precision('float64'):
        loss = focal_dice_loss(_logits_from_foreground(p), target, LossConfig(gamma=2.0, smooth=1e-5))
    # dice 0.149999625 + focal 0.0049896735
    assert loss.item() == pytest.approx(0.1549892985, abs=1e-9)


def test_perfect_prediction_costs_nothing():
    target = (np.random.default_rng(0).random((2, 6, 6)) < 0.4).astype(np.uint8)
    logits = np.where(target[:, np.newaxis] == np.arange(2).reshape(1, 2, 1, 1), 20.0, -20.0)
    with precision('float64'):
        assert focal_dice_loss(Tensor(logits), target).item() == pytest.approx(0.0, abs=1e-6)


def test_empty_target_predicted_empty_costs_nothing():
    target = np.zeros((1, 4, 4, 4), dtype=np.uint8)
    logits = np.zeros((1, 2, 4, 4, 4))
    logits[:, 0] = 20.0
    with precision('float64'):
        assert focal_dice_loss(Tensor(logits), target).item() == pytest.approx(0.0, abs=1e-6)


def test_gamma_zero_focal_term_is_cross_entropy():
    rng = np.random.default_rng(1)
    p = rng.uniform(0.05, 0.95, (3, 3))
    target = (rng.random((1, 3, 3)) < 0.5).astype(np.uint8)
    p_true = np.where(target[0] == 1, p, 1 - p)
    q = target[0]
    dice = 1 - (2 * np.sum(p * q) + 1e-5) / (np.sum(p + q) + 1e-5)
    with precision('float64'):
        loss = focal_dice_loss(_logits_from_foreground(p), target, LossConfig(gamma=0.0))
    assert loss.item() == pytest.approx(dice - np.mean(np.log(p_true)), rel=1e-9)


def test_deep_supervision_weights():
    assert ds_weights(4) == [1.0, 0.5, 0.25, 0.125]


def _outputs(rng, size=16, batch=2):
    return MultiScaleOutput([Tensor(rng.standard_normal((batch, 2) + (size // 2 ** i,) * 3)) for i in range(4)])


def test_deep_supervision_is_the_weighted_sum_over_heads():
    rng = np.random.default_rng(2)
    target = (rng.random((2, 16, 16, 16)) < 0.3).astype(np.uint8)
    with precision('float64'):
        outputs = _outputs(rng)
        expected = sum(w * focal_dice_loss(o, resize_nearest_array(target, o.shape[2:])).item()
                       for w, o in zip(ds_weights(4), outputs.outputs))
        assert ds_loss(outputs, target).item() == pytest.approx(expected, rel=1e-12)


def test_without_deep_supervision_only_full_resolution_counts():
    rng = np.random.default_rng(3)
    target = (rng.random((2, 16, 16, 16)) < 0.3).astype(np.uint8)
    with precision('float64'):
        outputs = _outputs(rng)
        loss = ds_loss(outputs, target, LossConfig(deep_supervision=False))
        assert loss.item() == focal_dice_loss(outputs.at(0), target).item()


def test_auxiliary_heads_get_no_gradient_without_deep_supervision():
    rng = np.random.default_rng(4)
    target = (rng.random((1, 8, 8, 8)) < 0.3).astype(np.uint8)
    outputs = _outputs(rng, size=8, batch=1)
    for o in outputs.outputs:
        o.requires_grad = True
    ds_loss(outputs, target, LossConfig(deep_supervision=False)).backward()
    assert outputs.at(0).grad is not None
    assert all(o.grad is None for o in outputs.outputs[1:])


def test_non_binary_target_is_rejected():
    with pytest.raises(InvalidLabelError) as info:
        focal_dice_loss(Tensor(np.zeros((1, 2, 2, 2))), np.array([[[0, 1], [2, 1]]]))
    assert 2 in info.value.values


def test_target_shape_must_match():
    with pytest.raises(ShapeError):
        focal_dice_loss(Tensor(np.zeros((1, 2, 4, 4))), np.zeros((1, 4, 5), dtype=np.uint8))


def test_negative_gamma_is_rejected():
    with pytest.raises(ConfigError):
        LossConfig(gamma=-1.0).validate()


def test_loss_gradients():
    result = run_suite('losses')
    assert result.passed, str(result.failures)


@pytest.mark.parametrize('label', [0, 1])
def test_single_voxel_loss_falls_as_the_true_class_probability_rises(label):
    target = np.full((1, 1, 1), label, dtype=np.uint8)
    true_class = np.linspace(0.05, 0.99, 40)
    with precision('float64'):
        losses = [focal_dice_loss(_logits_from_foreground(np.full((1, 1), p if label else 1 - p)), target).item()
                  for p in true_class]
    assert all(later < earlier for earlier, later in zip(losses, losses[1:]))
    assert min(losses) >= 0
