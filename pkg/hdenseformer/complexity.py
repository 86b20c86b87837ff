"""
analytic parameter and FLOP counts

conventions: one multiply-accumulate is 2 FLOPs; normalizations, softmax, activations,
bias additions and interpolation are not counted; batch size 1. every parameter
count mirrors the module constructors exactly, so `count_model(cfg).params` equals
`build_model(cfg).num_parameters()`
"""
from dataclasses import replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .backbone import LEVELS
from .dct import hidden_width
from .enums import TransformerKind
from .exceptions import ConfigError
from .model import ModelConfig

__all__ = (
    'LayerCost', 'ComplexityReport', 'count_linear', 'count_conv', 'count_attention', 'count_transformer',
    'count_dct_block', 'count_dct_stack', 'count_model', 'width_rows', 'depth_rows', 'format_width_table',
    'format_depth_table', 'COMPARISON_TOKENS', 'DEPTH_SWEEP_INPUT', 'PUBLISHED_WIDTH_COUNTS', 'PUBLISHED_DEPTH_COUNTS'
)

# (512 / 16) ** 2 patch tokens
COMPARISON_TOKENS = 1024
# dim -> (transformer gflops, transformer params, dct-x3 gflops, dct-x3 params)
PUBLISHED_WIDTH_COUNTS = {256: (6.837, 6.382e6, 2.671, 1.435e6), 512: (26.256, 25.347e6, 3.544, 2.290e6)}
# dct depth -> (params, gflops) of the 3D model on two modalities at 144^3
DEPTH_SWEEP_INPUT = (144, 144, 144)
PUBLISHED_DEPTH_COUNTS = {3: (3.25e6, 242.38), 6: (3.64e6, 242.96), 9: (4.03e6, 243.55)}


class LayerCost(NamedTuple):
    name: str
    params: int
    flops: int


class ComplexityReport:
    def __init__(self, title: str, layers: Sequence[LayerCost] = ()):
        self.title = title
        self.layers: List[LayerCost] = list(layers)

    @property
    def params(self) -> int:
        return sum(layer.params for layer in self.layers)

    @property
    def flops(self) -> int:
        return sum(layer.flops for layer in self.layers)

    @property
    def gflops(self) -> float:
        return self.flops / 1e9

    def add(self, name: str, params: int, flops: int = 0):
        self.layers.append(LayerCost(name, int(params), int(flops)))

    def extend(self, prefix: str, other: 'ComplexityReport'):
        for layer in other.layers:
            self.layers.append(LayerCost(f'{prefix}.{layer.name}' if prefix else layer.name, layer.params, layer.flops))

    def to_text(self, breakdown: bool = True) -> str:
        lines = [self.title]
        if breakdown and self.layers:
            width = max(len(layer.name) for layer in self.layers)
            lines.append(f'  {"layer":<{width}}  {"params":>12}  {"flops":>16}')
            for layer in self.layers:
                lines.append(f'  {layer.name:<{width}}  {layer.params:>12,}  {layer.flops:>16,}')
        lines.append(f'  total params {self.params:,} ({self.params / 1e6:.3f}M), '
                     f'flops {self.flops:,} ({self.gflops:.3f} GFLOPs)')
        return '\n'.join(lines)

    def to_kv(self) -> str:
        key = self.title.replace('=', '').replace(' ', '_')
        return f'{key}.params={self.params}\n{key}.flops={self.flops}'

    def __repr__(self):
        return f'<ComplexityReport {self.title!r} params={self.params} flops={self.flops}>'


def _check_positive(**values):
    for key, value in values.items():
        if value < 1:
            raise ConfigError(key, f'must be >= 1, got {value}')


def count_linear(in_features: int, out_features: int, n_tokens: int, bias: bool = True) -> Tuple[int, int]:
    return in_features * out_features + (out_features if bias else 0), 2 * in_features * out_features * n_tokens


def count_conv(in_channels: int, out_channels: int, kernel_volume: int, out_voxels: int,
               bias: bool = True) -> Tuple[int, int]:
    params = in_channels * out_channels * kernel_volume + (out_channels if bias else 0)
    return params, 2 * in_channels * out_channels * kernel_volume * out_voxels


def count_attention(dim: int, n_tokens: int, bias: bool = True) -> Tuple[int, int]:
    """q/k/v/out projections plus the QK^T and attention-value products"""
    params, flops = count_linear(dim, dim, n_tokens, bias)
    return 4 * params, 4 * flops + 2 * 2 * n_tokens * n_tokens * dim


def _count_feed_forward(report: ComplexityReport, name: str, dim: int, mlp_ratio: float, n_tokens: int,
                        bias: bool = True):
    hidden = hidden_width(dim, mlp_ratio)
    report.add(f'{name}.fc1', *count_linear(dim, hidden, n_tokens, bias))
    report.add(f'{name}.fc2', *count_linear(hidden, dim, n_tokens, bias))


def count_transformer(dim: int, layers: int, mlp_ratio: float = 2.0, heads: int = 4, n_tokens: int = COMPARISON_TOKENS,
                      bias: bool = True) -> ComplexityReport:
    """pre-norm transformer stack at full width, `heads` only has to divide `dim`"""
    _check_positive(dim=dim, layers=layers, heads=heads, n_tokens=n_tokens)
    if dim % heads:
        raise ConfigError('heads', f'{heads} heads do not divide {dim}')

    report = ComplexityReport(f'transformer d={dim} layers={layers}')
    for i in range(layers):
        report.add(f'layers.{i}.norm1', 2 * dim)
        report.add(f'layers.{i}.attn', *count_attention(dim, n_tokens, bias))
        report.add(f'layers.{i}.norm2', 2 * dim)
        _count_feed_forward(report, f'layers.{i}.ffn', dim, mlp_ratio, n_tokens, bias)
    return report


def count_dct_block(dim: int, growth: int = 32, layers_per_block: int = 4, mlp_ratio: float = 2.0, heads: int = 4,
                    n_tokens: int = COMPARISON_TOKENS) -> ComplexityReport:
    _check_positive(dim=dim, growth=growth, layers_per_block=layers_per_block, heads=heads, n_tokens=n_tokens)
    if growth % heads:
        raise ConfigError('heads', f'{heads} heads do not divide the growth width {growth}')

    report = ComplexityReport(f'dct block d={dim} g={growth}')
    for j in range(1, layers_per_block + 1):
        prefix = f'layers.{j - 1}'
        report.add(f'{prefix}.proj', *count_linear(dim + (j - 1) * growth, growth, n_tokens))
        report.add(f'{prefix}.norm1', 2 * growth)
        report.add(f'{prefix}.attn', *count_attention(growth, n_tokens))
        report.add(f'{prefix}.norm2', 2 * growth)
        _count_feed_forward(report, f'{prefix}.ffn', growth, mlp_ratio, n_tokens)
    report.add('head', *count_linear(dim + layers_per_block * growth, dim, n_tokens))
    return report


def count_dct_stack(dim: int, depth: int, growth: int = 32, mlp_ratio: float = 2.0, heads: int = 4,
                    n_tokens: int = COMPARISON_TOKENS, layers_per_block: int = 4) -> ComplexityReport:
    _check_positive(depth=depth)
    block = count_dct_block(dim, growth, layers_per_block, mlp_ratio, heads, n_tokens)
    report = ComplexityReport(f'dct stack d={dim} depth={depth} g={growth}')
    for i in range(depth):
        report.extend(f'blocks.{i}', block)
    return report


def _count_conv_unit(report: ComplexityReport, name: str, in_channels: int, out_channels: int, ndim: int,
                     out_voxels: int):
    report.add(f'{name}.conv', *count_conv(in_channels, out_channels, 3 ** ndim, out_voxels, bias=False))
    report.add(f'{name}.norm', 2 * out_channels)


def count_model(cfg: ModelConfig, input_shape: Optional[Sequence[int]] = None) -> ComplexityReport:
    """
    full network: embedding paths, fusion, adapters, encoder, decoder and heads
    :param input_shape: spatial extents to count at, defaults to the configured ones
    """
    if input_shape is not None:
        cfg = replace(cfg, input_shape=tuple(input_shape))
    cfg.validate()
    nd = cfg.ndim
    voxels = [int(np.prod(cfg.input_shape)) // (2 ** level) ** nd for level in range(LEVELS)]
    c = cfg.channels
    report = ComplexityReport(f'model {cfg.mode.value} C={cfg.in_channels} depth={cfg.dct_depth} '
                              f'input={"x".join(map(str, cfg.input_shape))}')

    if cfg.use_mpe:
        mpe = cfg.mpe_config()
        n = mpe.n_tokens
        for i in range(mpe.n_paths):
            path = f'mpe.paths.{i}'
            report.add(f'{path}.embed.proj', *count_conv(mpe.path_in_channels, mpe.token_dim, mpe.patch ** nd, n))
            report.add(f'{path}.embed.position', n * mpe.token_dim)
            if mpe.transformer is TransformerKind.DCT:
                transformer = count_dct_stack(mpe.token_dim, mpe.dct_depth, mpe.growth, mpe.mlp_ratio, mpe.heads, n,
                                              mpe.layers_per_block)
            else:
                transformer = count_transformer(mpe.token_dim, mpe.standard_layers, mpe.mlp_ratio, mpe.heads, n)
            report.extend(f'{path}.transformer', transformer)
        report.add('mpe.fusion', *count_conv(mpe.n_paths * mpe.token_dim, mpe.fused_channels, 1, n))
        for i, level in enumerate(sorted(set(mpe.injection_levels))):
            report.add(f'mpe.adapters.{i}', *count_conv(mpe.fused_channels, c[level], 1, voxels[level]))

    widths = (cfg.in_channels,) + tuple(c)
    for level in range(LEVELS):
        stage = f'encoder.stages.{level}'
        _count_conv_unit(report, f'{stage}.units.0', widths[level], widths[level + 1], nd, voxels[level])
        _count_conv_unit(report, f'{stage}.units.1', widths[level + 1], widths[level + 1], nd, voxels[level])

    for level in range(LEVELS - 2, -1, -1):
        stage = f'decoder.stages.{level}'
        # every input voxel scatters a full 2^nd kernel
        report.add(f'{stage}.up', *count_conv(c[level + 1], c[level], 2 ** nd, voxels[level + 1]))
        _count_conv_unit(report, f'{stage}.units.0', 2 * c[level], c[level], nd, voxels[level])
        _count_conv_unit(report, f'{stage}.units.1', c[level], c[level], nd, voxels[level])
    for level in range(LEVELS):
        report.add(f'decoder.heads.{level}', *count_conv(c[level], cfg.classes, 1, voxels[level]))
    return report


def width_rows(n_tokens: int = COMPARISON_TOKENS, mlp_ratio: float = 2.0) -> List[Dict]:
    """standard 12-layer transformer against three dct blocks at d = 256 and 512"""
    rows = []
    for dim, (pub_t_gflops, pub_t_params, pub_d_gflops, pub_d_params) in PUBLISHED_WIDTH_COUNTS.items():
        transformer = count_transformer(dim, 12, mlp_ratio, n_tokens=n_tokens)
        dct = count_dct_stack(dim, 3, mlp_ratio=mlp_ratio, n_tokens=n_tokens)
        rows.append(dict(
            dim=dim, transformer=transformer, dct=dct,
            reduction=transformer.params / dct.params,
            flop_reduction=transformer.flops / dct.flops,
            published=dict(transformer_gflops=pub_t_gflops, transformer_params=pub_t_params,
                           dct_gflops=pub_d_gflops, dct_params=pub_d_params),
        ))
    return rows


def depth_rows(cfg: Optional[ModelConfig] = None, depths: Sequence[int] = (3, 6, 9)) -> List[Dict]:
    """full-model counts at several dct depths, spacing between consecutive rows included"""
    cfg = cfg or ModelConfig(input_shape=DEPTH_SWEEP_INPUT)
    rows, previous = [], None
    for depth in depths:
        report = count_model(replace(cfg, dct_depth=depth))
        rows.append(dict(depth=depth, report=report, params=report.params, gflops=report.gflops,
                         delta=None if previous is None else report.params - previous,
                         published=PUBLISHED_DEPTH_COUNTS.get(depth)))
        previous = report.params
    return rows


def format_width_table(rows: List[Dict]) -> str:
    lines = [f'{"dim":>5}  {"model":<16}  {"params":>12}  {"GFLOPs":>9}  {"published":>21}  {"reduction":>9}']
    for row in rows:
        pub = row['published']
        lines.append(f'{row["dim"]:>5}  {"transformer-12":<16}  {row["transformer"].params / 1e6:>11.3f}M  '
                     f'{row["transformer"].gflops:>9.3f}  '
                     f'{pub["transformer_params"] / 1e6:>7.3f}M {pub["transformer_gflops"]:>7.3f} GF  {"":>9}')
        lines.append(f'{row["dim"]:>5}  {"dct-stack-3":<16}  {row["dct"].params / 1e6:>11.3f}M  '
                     f'{row["dct"].gflops:>9.3f}  '
                     f'{pub["dct_params"] / 1e6:>7.3f}M {pub["dct_gflops"]:>7.3f} GF  {row["reduction"]:>8.2f}x')
    return '\n'.join(lines)


def format_depth_table(rows: List[Dict]) -> str:
    lines = [f'{"depth":>5}  {"params":>12}  {"delta":>10}  {"GFLOPs":>9}  {"published":>18}']
    for row in rows:
        delta = '' if row['delta'] is None else f'{row["delta"]:+,}'
        pub = row['published']
        pub_text = '' if pub is None else f'{pub[0] / 1e6:.2f}M {pub[1]:.2f} GF'
        lines.append(f'{row["depth"]:>5}  {row["params"] / 1e6:>11.3f}M  {delta:>10}  {row["gflops"]:>9.3f}  '
                     f'{pub_text:>18}')
    return '\n'.join(lines)
