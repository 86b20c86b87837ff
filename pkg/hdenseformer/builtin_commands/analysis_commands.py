import sys

from ..command import Command
from ..complexity import count_dct_stack, count_model, count_transformer, format_width_table, format_depth_table, \
    width_rows, depth_rows
from ..gradcheck_suites import SUITES, run_suites
from ..model import ModelConfig
from ..training import RunConfig
from ..util import CommandArgumentParser


@Command('count', syntax='(--table1) (--table3) (--config run.cfg) (--tokens N) (--kv) (--breakdown)',
         help='prints analytic parameter and FLOP counts of the transformer, the dct stack and the full model')
def cmd_count(*args):
    parser = CommandArgumentParser(cmd_count)
    parser.add_argument('--table1', '--widths', dest='widths', action='store_true')
    parser.add_argument('--table3', '--depths', dest='depths', action='store_true')
    parser.add_argument('--config', default=None)
    parser.add_argument('--tokens', type=int, default=None)
    parser.add_argument('--kv', action='store_true')
    parser.add_argument('--breakdown', action='store_true')
    ns = parser.parse_args(args)

    if ns.widths or ns.depths:
        if ns.widths:
            print(format_width_table(width_rows()))
        if ns.widths and ns.depths:
            print()
        if ns.depths:
            print(format_depth_table(depth_rows()))
        return 0

    model_cfg = RunConfig.load(ns.config).model if ns.config else ModelConfig()
    n_tokens = ns.tokens or model_cfg.mpe_config().n_tokens
    reports = [
        count_transformer(model_cfg.embed_dim, model_cfg.standard_layers, model_cfg.mlp_ratio, model_cfg.heads,
                          n_tokens),
        count_dct_stack(model_cfg.embed_dim, model_cfg.dct_depth, model_cfg.growth, model_cfg.mlp_ratio,
                        model_cfg.heads, n_tokens, model_cfg.layers_per_block),
        count_model(model_cfg),
    ]
    for report in reports:
        print(report.to_kv() if ns.kv else report.to_text(breakdown=ns.breakdown))


@Command('gradcheck', syntax='(--all) (--suite NAME ...)',
         help=f'runs the float64 gradient suites ({", ".join(SUITES)}), exit status 1 on any failure')
def cmd_gradcheck(*args):
    parser = CommandArgumentParser(cmd_gradcheck)
    parser.add_argument('--all', action='store_true')
    parser.add_argument('--suite', action='append', choices=list(SUITES), default=None)
    ns = parser.parse_args(args)

    names = list(SUITES) if ns.all or not ns.suite else ns.suite
    results = run_suites(names, verbose=True)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f'[GRADCHECK] failed suites: {", ".join(failed)}', file=sys.stderr)
        return 1
    print(f'[GRADCHECK] all {len(results)} suites passed')
