from pathlib import Path

from ..command import Command
from ..config import get_data_dir
from ..training import RunConfig, evaluate, train
from ..database import DB_FILENAME
from ..exceptions import InvalidArgumentsError
from ..util import CommandArgumentParser


@Command('train', syntax='(--config run.cfg) (--fold K) (--seed S) (--data DIR) (--out DIR) (--epochs N) '
                         '(--write-config PATH)',
         help='trains a model, writing best.ckpt and train.log to the output folder')
def cmd_train(*args):
    parser = CommandArgumentParser(cmd_train)
    parser.add_argument('--config', default=None)
    parser.add_argument('--fold', type=int, default=None)
    parser.add_argument('--seed', type=int, default=None)
    parser.add_argument('--data', default=None)
    parser.add_argument('--out', default=None)
    parser.add_argument('--epochs', type=int, default=None)
    parser.add_argument('--write-config', dest='write_config', default=None)
    ns = parser.parse_args(args)

    if ns.write_config:
        path = RunConfig().save(ns.write_config)
        print(f'[TRAIN] wrote the default run config to {path}')
        return 0

    run = RunConfig.load(ns.config) if ns.config else RunConfig.from_harness()
    changes = {key: value for key, value in (('fold', ns.fold), ('seed', ns.seed), ('data_dir', ns.data),
                                             ('output_dir', ns.out), ('max_epochs', ns.epochs))
               if value is not None}
    if 'max_epochs' in changes and run.patience > changes['max_epochs']:
        changes['patience'] = changes['max_epochs']
    if ns.fold is not None and ns.out is None:
        # one output folder per fold
        changes['output_dir'] = str(Path(run.output_dir) / f'fold_{ns.fold}')
    run = run.replace(**changes)

    train(run)


@Command('eval', syntax='<checkpoint> (checkpoint ...) (--data DIR) (--report PATH) (--db)',
         help='evaluates one checkpoint per fold, printing and writing DSC / JI / HD95 mean and std',
         aliases=['evaluate'])
def cmd_eval(*args):
    parser = CommandArgumentParser(cmd_eval)
    parser.add_argument('checkpoints', nargs='+')
    parser.add_argument('--data', default=None)
    parser.add_argument('--report', default=None)
    parser.add_argument('--db', action='store_true')
    ns = parser.parse_args(args)

    data_dir = Path(ns.data) if ns.data else get_data_dir()
    report = Path(ns.report) if ns.report else Path(ns.checkpoints[0]).with_name('report.tsv')
    db_path = report.with_name(DB_FILENAME) if ns.db else None
    if not data_dir.is_dir():
        raise InvalidArgumentsError(f'dataset folder {data_dir} does not exist', cmd_eval)

    evaluate(ns.checkpoints, data_dir, report, db_path=db_path)
    print(f'[EVAL] report written to {report}')
