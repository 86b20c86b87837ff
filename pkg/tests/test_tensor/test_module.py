import numpy as np
import pytest

from hdenseformer import HDenseFormerError, ShapeError
from hdenseformer.nn import Conv, LayerNorm, Linear, Module, ModuleList


class TwoLayer(Module):
    def __init__(self, rng):
        super().__init__()
        self.first = Linear(4, 3, rng)
        self.norm = LayerNorm(3)
        self.heads = ModuleList([Linear(3, 2, rng, bias=False), Linear(3, 1, rng)])

    def forward(self, x):
        h = self.norm(self.first(x))
        return [head(h) for head in self.heads]


def test_parameters_are_named_in_assignment_order():
    model = TwoLayer(np.random.default_rng(0))
    assert list(model.named_parameters()) == [
        'first.weight', 'first.bias', 'norm.weight', 'norm.bias', 'heads.0.weight', 'heads.1.weight', 'heads.1.bias',
    ]
    assert model.num_parameters() == 4 * 3 + 3 + 3 + 3 + 3 * 2 + 3 + 1


def test_state_dict_round_trip():
    source = TwoLayer(np.random.default_rng(0))
    target = TwoLayer(np.random.default_rng(1))
    target.load_state_dict(source.state_dict())
    for (name, a), b in zip(source.named_parameters().items(), target.parameters()):
        assert np.array_equal(a.data, b.data), name


def test_state_dict_is_a_copy():
    model = TwoLayer(np.random.default_rng(0))
    state = model.state_dict()
    state['first.bias'][:] = 7.0
    assert not np.any(model.first.bias.data == 7.0)


def test_load_state_dict_rejects_missing_keys():
    model = TwoLayer(np.random.default_rng(0))
    state = model.state_dict()
    del state['norm.bias']
    with pytest.raises(HDenseFormerError, match='norm.bias'):
        model.load_state_dict(state)


def test_load_state_dict_rejects_wrong_shapes():
    model = TwoLayer(np.random.default_rng(0))
    state = model.state_dict()
    state['first.weight'] = np.zeros((3, 5))
    with pytest.raises(ShapeError):
        model.load_state_dict(state)


def test_zero_grad_clears_every_parameter():
    model = TwoLayer(np.random.default_rng(0))
    outs = model(np.ones((2, 4)))
    (outs[0].sum() + outs[1].sum()).backward()
    assert all(p.grad is not None for p in model.parameters())
    model.zero_grad()
    assert all(p.grad is None for p in model.parameters())


def test_conv_layer_uses_fan_in_bound():
    layer = Conv(2, 5, 3, ndim=3, rng=np.random.default_rng(0))
    assert layer.weight.shape == (5, 2, 3, 3, 3)
    assert np.max(np.abs(layer.weight.data)) <= 1 / np.sqrt(2 * 27) + 1e-6


def test_module_must_call_base_init():
    class Broken(Module):
        def __init__(self):
            self.x = 1

    with pytest.raises(HDenseFormerError):
        Broken()
