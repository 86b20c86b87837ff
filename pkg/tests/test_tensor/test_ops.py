import numpy as np
import pytest

from hdenseformer import HDenseFormerError, NonFiniteError, ShapeError, no_grad, precision
from hdenseformer.tensor import (Tensor, concat, exp, gelu, layer_norm, log, matmul, one_hot, relu, softmax, split,
                                 instance_norm)
from hdenseformer.tensor import max as tensor_max


def test_broadcast_add_gradient_is_reduced_to_operand_shape():
    a = Tensor(np.ones((3, 4)), requires_grad=True)
    b = Tensor(np.arange(4.0), requires_grad=True)
    (a + b).sum().backward()
    assert a.grad.shape == (3, 4)
    assert np.array_equal(b.grad, np.full(4, 3.0))


def test_incompatible_shapes_raise_shape_error_naming_the_op():
    with pytest.raises(ShapeError) as info:
        Tensor(np.ones((3, 4))) + Tensor(np.ones((2, 4)))
    assert info.value.op == 'add'
    assert info.value.shapes == ((3, 4), (2, 4))


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 5))))


def test_gradient_accumulates_over_reused_tensor():
    x = Tensor(np.array([2.0, -1.0]), requires_grad=True)
    (x * x + x).sum().backward()
    assert np.allclose(x.grad, 2 * np.array([2.0, -1.0]) + 1)


def test_exp_overflow_raises_non_finite_error():
    with pytest.raises(NonFiniteError) as info:
        exp(Tensor(np.array([1e6])))
    assert info.value.op == 'exp'


def test_log_floor_clamps_and_zeroes_the_gradient():
    x = Tensor(np.array([0.0, 1.0]), requires_grad=True)
    out = log(x, floor=1e-12)
    assert np.isclose(out.data[0], np.log(1e-12))
    out.sum().backward()
    assert x.grad[0] == 0.0
    assert np.isclose(x.grad[1], 1.0)


def test_log_of_zero_without_floor_is_non_finite():
    with pytest.raises(NonFiniteError):
        log(Tensor(np.array([0.0])))


def test_relu_and_gelu_values():
    x = Tensor(np.array([-1.0, 0.5]))
    assert np.allclose(relu(x).data, [0.0, 0.5])
    assert np.allclose(gelu(Tensor(np.array([0.0]))).data, [0.0])
    # gelu(1) = Phi(1)
    assert np.isclose(gelu(Tensor(np.array([1.0]), dtype=np.float64)).data[0], 0.8413447460685429)


def test_softmax_rows_sum_to_one_and_survive_large_logits():
    out = softmax(Tensor(np.array([[1000.0, 1000.0], [0.0, np.log(3.0)]]), dtype=np.float64), axis=-1)
    assert np.allclose(out.data.sum(axis=-1), 1.0)
    assert np.allclose(out.data[1], [0.25, 0.75])


def test_layer_norm_normalizes_last_axis():
    with precision('float64'):
        x = Tensor(np.random.default_rng(0).standard_normal((4, 8)))
        out = layer_norm(x, Tensor(np.ones(8)), Tensor(np.zeros(8)))
    assert np.allclose(out.data.mean(axis=-1), 0.0, atol=1e-12)
    assert np.allclose(out.data.std(axis=-1), 1.0, atol=1e-4)


def test_instance_norm_normalizes_each_sample_and_channel():
    with precision('float64'):
        x = Tensor(np.random.default_rng(1).standard_normal((2, 3, 5, 5)) * 4 + 2)
        out = instance_norm(x, Tensor(np.ones(3)), Tensor(np.zeros(3)))
    assert np.allclose(out.data.mean(axis=(2, 3)), 0.0, atol=1e-12)


def test_max_ties_share_the_gradient():
    x = Tensor(np.array([[1.0, 3.0, 3.0]]), requires_grad=True)
    tensor_max(x, axis=1).sum().backward()
    assert np.allclose(x.grad, [[0.0, 0.5, 0.5]])


def test_split_and_concat_are_inverse():
    x = Tensor(np.arange(10.0).reshape(2, 5))
    parts = split(x, (2, 3), axis=1)
    assert [p.shape for p in parts] == [(2, 2), (2, 3)]
    assert np.array_equal(concat(parts, axis=1).data, x.data)


def test_getitem_gradient_scatters_back():
    x = Tensor(np.zeros((3, 3)), requires_grad=True)
    x[1:, 0].sum().backward()
    assert np.array_equal(x.grad[:, 0], [0.0, 1.0, 1.0])
    assert x.grad[:, 1:].sum() == 0.0


def test_one_hot_inserts_class_axis():
    encoded = one_hot(np.array([[0, 1], [1, 1]]), 2, axis=1)
    assert encoded.shape == (2, 2, 2)
    assert np.array_equal(encoded.data[:, 1], [[0, 1], [1, 1]])


def test_no_grad_records_nothing():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = (x * 2).sum()
    assert not y.requires_grad
    with pytest.raises(HDenseFormerError):
        y.backward()


def test_precision_switches_default_dtype_and_restores_it():
    with precision('float64'):
        assert Tensor([1.0]).dtype == np.float64
    assert Tensor([1.0]).dtype == np.float32


def test_item_needs_single_element():
    with pytest.raises(HDenseFormerError):
        Tensor(np.ones(2)).item()
