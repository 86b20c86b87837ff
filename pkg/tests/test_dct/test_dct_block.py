import numpy as np
import pytest

from hdenseformer import ConfigError, ShapeError, precision
from hdenseformer.complexity import count_dct_block, count_dct_stack, count_transformer
from hdenseformer.dct import DCTBlock, DCTConfig, DCTLayer, DCTStack, MultiHeadAttention, StandardTransformer
from hdenseformer.tensor import Tensor
from hdenseformer.gradcheck_suites import run_suite


def _block(dim=16, growth=8, layers=4, heads=2, seed=0):
    return DCTBlock(DCTConfig(token_dim=dim, growth=growth, layers_per_block=layers, heads=heads),
                    np.random.default_rng(seed))


def test_block_keeps_token_shape():
    block = _block()
    x = np.random.default_rng(1).standard_normal((2, 5, 16))
    assert block(x).shape == (2, 5, 16)
    assert block(x[0]).shape == (5, 16)


def test_layer_input_widths_grow_by_the_growth_rate():
    cfg = DCTConfig(token_dim=128, growth=32, layers_per_block=4)
    assert [cfg.layer_input_dim(j) for j in range(1, 5)] == [128, 160, 192, 224]
    assert cfg.concat_dim == 256
    block = DCTBlock(cfg, np.random.default_rng(0))
    assert [layer.proj.weight.shape for layer in block.layers] == [(32, 128), (32, 160), (32, 192), (32, 224)]
    assert block.head.weight.shape == (128, 256)


def test_single_block_parameter_count():
    block = DCTBlock(DCTConfig(token_dim=128), np.random.default_rng(0))
    assert block.num_parameters() == 89_728
    assert count_dct_block(128).params == 89_728


@pytest.mark.parametrize('dim,expected', [(256, 515_328), (512, 1_302_528)])
def test_stack_of_three_parameter_count(dim, expected):
    assert count_dct_stack(dim, 3).params == expected


def test_built_stack_matches_the_analytic_count():
    stack = DCTStack(DCTConfig(token_dim=64, growth=16, layers_per_block=3, heads=4), 2, np.random.default_rng(0))
    assert stack.num_parameters() == count_dct_stack(64, 2, growth=16, layers_per_block=3).params


def test_standard_transformer_matches_the_analytic_count():
    model = StandardTransformer(32, 2, 4, 2.0, np.random.default_rng(0))
    assert model.num_parameters() == count_transformer(32, 2).params


def test_zero_depth_is_rejected():
    with pytest.raises(ConfigError) as info:
        DCTStack(DCTConfig(token_dim=16, growth=8, heads=2), 0, np.random.default_rng(0))
    assert info.value.key == 'dct_depth'


def test_heads_must_divide_growth():
    with pytest.raises(ConfigError):
        _block(growth=10, heads=4)


def test_wrong_token_dim():
    with pytest.raises(ShapeError):
        _block()(np.ones((5, 12)))


@pytest.mark.parametrize('depth', [1, 2, 3, 6, 9])
def test_stack_keeps_token_shape_at_every_depth(depth):
    stack = DCTStack(DCTConfig(token_dim=16, growth=8, layers_per_block=2, heads=2), depth, np.random.default_rng(0))
    assert len(stack.blocks) == depth
    assert stack(np.random.default_rng(1).standard_normal((2, 4, 16))).shape == (2, 4, 16)


def test_layer_rejects_inputs_with_different_token_counts():
    layer = DCTLayer(2, DCTConfig(token_dim=16, growth=8, heads=2), np.random.default_rng(0))
    rng = np.random.default_rng(1)
    with pytest.raises(ShapeError):
        layer([Tensor(rng.standard_normal((5, 16))), Tensor(rng.standard_normal((4, 8)))])


def test_block_is_permutation_equivariant_over_tokens():
    block = _block()
    rng = np.random.default_rng(2)
    x = rng.standard_normal((7, 16))
    order = rng.permutation(7)
    with precision('float64'):
        block.astype(np.float64)
        out = block(x).data
        permuted = block(x[order]).data
    assert np.allclose(out[order], permuted, atol=1e-10)


def test_attention_rows_are_distributions():
    attn = MultiHeadAttention(8, 2, np.random.default_rng(0))
    attn(np.random.default_rng(1).standard_normal((3, 6, 8)))
    assert attn.last_attention.shape == (3, 2, 6, 6)
    assert np.allclose(attn.last_attention.sum(axis=-1), 1.0, atol=1e-5)


def test_dct_gradients():
    result = run_suite('dct')
    assert result.passed, str(result.failures)
    assert result.max_relative_error < 1e-4
