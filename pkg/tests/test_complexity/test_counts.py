from dataclasses import replace

import pytest

from hdenseformer import ConfigError
from hdenseformer.complexity import (PUBLISHED_WIDTH_COUNTS, count_attention, count_dct_stack, count_model,
                                     count_transformer, format_width_table, format_depth_table, width_rows, depth_rows)
from hdenseformer.enums import Mode
from hdenseformer.model import ModelConfig


@pytest.mark.parametrize('dim,expected', [(256, 6_325_248), (512, 25_233_408)])
def test_standard_transformer_parameters(dim, expected):
    report = count_transformer(dim, 12)
    assert report.params == expected
    # within 5% of the published totals
    assert report.params == pytest.approx(PUBLISHED_WIDTH_COUNTS[dim][1], rel=0.05)


def test_reduction_ratios():
    rows = {row['dim']: row for row in width_rows()}
    assert rows[256]['reduction'] >= 4
    assert rows[512]['reduction'] >= 10
    assert rows[512]['reduction'] > rows[256]['reduction']
    assert rows[512]['flop_reduction'] > rows[256]['flop_reduction'] > 1


def test_reduction_grows_with_the_token_width():
    ratios = [count_transformer(d, 12).params / count_dct_stack(d, 3).params for d in (128, 256, 384, 512)]
    assert ratios == sorted(ratios)


def test_attention_products_are_quadratic_in_tokens():
    def product_flops(n):
        # attention cost without the four projections
        return count_attention(64, n)[1] - 4 * 2 * 64 * 64 * n

    assert product_flops(200) == 4 * product_flops(100)


def test_transformer_flops_follow_the_multiply_accumulate_rule():
    n, d = 1024, 256
    projections = 4 * 2 * d * d * n
    products = 2 * 2 * n * n * d
    feed_forward = 2 * 2 * d * 2 * d * n
    assert count_transformer(d, 1).flops == projections + products + feed_forward


def test_depth_sweep_is_equally_spaced():
    rows = depth_rows()
    assert [row['depth'] for row in rows] == [3, 6, 9]
    assert rows[0]['delta'] is None
    assert rows[1]['delta'] == rows[2]['delta'] > 0
    assert rows[1]['delta'] == 2 * 3 * count_dct_stack(128, 1).params
    assert rows[0]['gflops'] < rows[1]['gflops'] < rows[2]['gflops']


def test_tables_format():
    table = format_width_table(width_rows())
    assert 'transformer-12' in table and 'dct-stack-3' in table
    assert len(table.splitlines()) == 5
    assert len(format_depth_table(depth_rows()).splitlines()) == 4


SMALL = ModelConfig(mode=Mode.THREE_D, in_channels=2, input_shape=(32, 32, 32), embed_dim=16, fused_channels=8,
                    growth=8, layers_per_block=2, heads=2, dct_depth=1, channels=(4, 8, 8, 16))


def test_count_model_at_another_input_shape_keeps_backbone_params():
    small = count_model(SMALL)
    big = count_model(SMALL, input_shape=(64, 64, 64))
    backbone = [layer for layer in small.layers if not layer.name.startswith('mpe.')]
    backbone_big = [layer for layer in big.layers if not layer.name.startswith('mpe.')]
    assert sum(l.params for l in backbone) == sum(l.params for l in backbone_big)
    assert sum(l.flops for l in backbone_big) == 8 * sum(l.flops for l in backbone)


def test_report_text_and_kv():
    report = count_dct_stack(64, 2, growth=16)
    text = report.to_text(breakdown=True)
    assert 'blocks.1.head' in text
    assert 'blocks.1.head' not in report.to_text(breakdown=False)
    kv = dict(line.rsplit('=', 1) for line in report.to_kv().splitlines())
    assert int(next(v for k, v in kv.items() if k.endswith('.params'))) == report.params
    assert report.gflops == report.flops / 1e9


def test_invalid_sizes():
    with pytest.raises(ConfigError):
        count_dct_stack(256, 0)
    with pytest.raises(ConfigError):
        count_transformer(250, 12, heads=4)


def test_two_modalities_double_the_path_parameters():
    one = count_model(replace(SMALL, in_channels=1))
    two = count_model(SMALL)
    assert _path_params(two) == 2 * _path_params(one)


def _path_params(report) -> int:
    return sum(layer.params for layer in report.layers if layer.name.startswith('mpe.paths.'))
