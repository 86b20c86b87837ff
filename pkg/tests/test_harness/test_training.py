import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import hdenseformer.training.trainer as trainer_module
from hdenseformer import CheckpointError, ConfigError, TrainingDivergedError, precision
from hdenseformer.config import cfg
from hdenseformer.data import VolumeDataset, list_cases, synth_dataset
from hdenseformer.database import DB_FILENAME, get_case_metrics, get_epoch_records, get_training_run
from hdenseformer.enums import Event, Mode
from hdenseformer.events import event_handler
from hdenseformer.metrics import MetricReport
from hdenseformer.model import build_model
from hdenseformer.nn import Parameter
from hdenseformer.tensor import Tensor
from hdenseformer.training import (Adam, RunConfig, decode_checkpoint, encode_checkpoint, evaluate,
                                   evaluate_predictions, load_checkpoint, poly_lr, restore_model, save_checkpoint,
                                   smoothed_losses, train)
from hdenseformer.training.trainer import EpochSummary

from .conftest import TINY_2D


def test_poly_lr_values():
    assert poly_lr(0, 100, 1e-3) == 1e-3
    assert poly_lr(99, 100, 1e-3) == pytest.approx(1e-3 * 0.01 ** 0.9)
    assert poly_lr(50, 100, 1e-3, exponent=1.0) == pytest.approx(5e-4)
    values = [poly_lr(e, 10, 1.0) for e in range(10)]
    assert values == sorted(values, reverse=True)


@pytest.mark.parametrize('epoch,max_epochs', [(100, 100), (-1, 100), (0, 0)])
def test_poly_lr_rejects_out_of_range(epoch, max_epochs):
    with pytest.raises(ValueError):
        poly_lr(epoch, max_epochs, 1e-3)


def test_adam_matches_a_hand_iteration():
    lr, (b1, b2), eps, decay = 0.1, (0.9, 0.999), 1e-8, 0.01
    grads = [0.5, -1.5, 2.0]
    with precision('float64'):
        param = Parameter(np.array([1.0]))
    optimizer = Adam([param], lr=lr, betas=(b1, b2), eps=eps, weight_decay=decay)

    w, m, v = 1.0, 0.0, 0.0
    for t, grad in enumerate(grads, start=1):
        g = grad + decay * w
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        w -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)

        param.grad = np.array([grad])
        optimizer.step()
        assert param.data[0] == pytest.approx(w, rel=1e-12)
    assert optimizer.step_count == 3


def test_adam_skips_parameters_without_gradients():
    param = Parameter(np.ones(3))
    Adam([param], lr=1.0).step()
    assert np.array_equal(param.data, np.ones(3))


def test_checkpoint_round_trip(tmp_path):
    model = build_model(TINY_2D, seed=4)
    optimizer = Adam(model.parameters())
    for p in model.parameters():
        p.grad = np.ones_like(p.data)
    optimizer.step()
    path = save_checkpoint(tmp_path / 'best.ckpt', model, optimizer, epoch=7, metrics={'val_dsc': 0.5},
                           run={'seed': 4})

    checkpoint = load_checkpoint(path)
    assert checkpoint.model_config == TINY_2D
    assert (checkpoint.seed, checkpoint.epoch, checkpoint.metrics, checkpoint.run) == (4, 7, {'val_dsc': 0.5},
                                                                                      {'seed': 4})
    assert checkpoint.optimizer['step'] == 1
    assert all(np.array_equal(a, b) for a, b in zip(checkpoint.optimizer['m'], optimizer.m))

    restored = restore_model(checkpoint)
    for (name, a), b in zip(model.named_parameters().items(), restored.parameters()):
        assert np.array_equal(a.data, b.data), name
    assert encode_checkpoint(restored, epoch=7) == encode_checkpoint(model, epoch=7)


def test_checkpoint_without_optimizer_state():
    model = build_model(TINY_2D)
    checkpoint = decode_checkpoint(encode_checkpoint(model))
    assert checkpoint.optimizer is None
    assert len(checkpoint.state) == len(model.parameters())


@pytest.mark.parametrize('corrupt', [
    lambda raw: raw[:10],
    lambda raw: b'BADMAGIC' + raw[8:],
    lambda raw: raw[:-4],
    lambda raw: raw + b'\0\0\0\0',
], ids=['short', 'magic', 'truncated', 'trailing'])
def test_corrupt_checkpoint_is_rejected(corrupt):
    raw = encode_checkpoint(build_model(TINY_2D))
    with pytest.raises(CheckpointError):
        decode_checkpoint(corrupt(raw))


def test_missing_checkpoint(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / 'nope.ckpt')


def test_run_config_round_trip(tmp_path, tiny_run):
    run = tiny_run(lr=5e-4, fold=1, seed=9)
    run.save(tmp_path / 'run.cfg')
    assert RunConfig.load(tmp_path / 'run.cfg') == run


def test_run_config_fills_missing_keys(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text(json.dumps({'lr': 0.01, 'model': {'dct_depth': 3}}))
    run = RunConfig.load(path)
    assert run.lr == 0.01
    assert run.model.dct_depth == 3
    assert run.patience == 30
    assert 'weight_decay' in json.loads(path.read_text())


def test_run_config_rejects_unknown_keys():
    with pytest.raises(ConfigError) as info:
        RunConfig.from_dict({'lr': 1e-3, 'learning_rate': 1e-3})
    assert info.value.key == 'learning_rate'
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'model': {'depth': 3}})


@pytest.mark.parametrize('changes', [dict(lr=-1.0), dict(patience=0), dict(patience=200), dict(fold=5),
                                     dict(betas=(0.9, 1.0)), dict(batch_size=0)])
def test_run_config_validation(changes):
    with pytest.raises(ConfigError):
        RunConfig(**changes).validate()


def test_run_config_reads_paths_from_the_environment(monkeypatch):
    run = RunConfig(data_dir='ENV_HDF_DATA')
    monkeypatch.setenv('HDF_DATA', '/tmp/volumes')
    assert str(run.data_path) == '/tmp/volumes'
    monkeypatch.delenv('HDF_DATA')
    with pytest.raises(ConfigError):
        run.data_path


def test_run_defaults_come_from_the_harness_config(monkeypatch, tmp_path):
    assert RunConfig.from_harness() == RunConfig(data_dir='data', output_dir=str(Path('runs') / 'run'))
    monkeypatch.setenv('HDF_OUT', str(tmp_path / 'out'))
    cfg['output_dir'] = 'ENV_HDF_OUT'
    cfg['data_dir'] = 'volumes'
    cfg['seed'] = 7
    run = RunConfig.from_harness()
    assert run.output_path == tmp_path / 'out' / 'run'
    assert run.data_path == Path('volumes')
    assert run.seed == 7


def test_default_batch_sizes():
    assert RunConfig().effective_batch_size == 2
    assert RunConfig(model=TINY_2D).effective_batch_size == 8
    assert RunConfig(model=TINY_2D, batch_size=3).effective_batch_size == 3


def test_frozen_model_stops_after_patience(tiny_run):
    result = train(tiny_run(lr=0.0, max_epochs=10, patience=2, augment=False), verbose=False)
    assert result.epochs_run == 3
    assert result.stopped_early
    assert result.best_epoch == 0
    assert [s.improved for s in result.history] == [True, False, False]
    assert len(result.log.read_text().splitlines()) == 3


def test_training_is_reproducible(tiny_run, tmp_path):
    first = train(tiny_run(output_dir=str(tmp_path / 'a')), verbose=False)
    second = train(tiny_run(output_dir=str(tmp_path / 'b')), verbose=False)
    assert first.checkpoint.read_bytes() == second.checkpoint.read_bytes()
    assert first.log.read_text() == second.log.read_text()


def test_log_lines(tiny_run):
    result = train(tiny_run(max_epochs=2, patience=2), verbose=False)
    lines = result.log.read_text().splitlines()
    assert len(lines) == 2
    fields = dict(part.split('=') for part in lines[0].split())
    assert set(fields) == {'epoch', 'lr', 'train_loss', 'val_dsc', 'improved'}
    assert float(fields['lr']) == pytest.approx(1e-3)
    assert 0.0 <= float(fields['val_dsc']) <= 1.0
    assert lines[0] == result.history[0].to_line()


def test_checkpoint_holds_the_best_epoch(tiny_run):
    result = train(tiny_run(), verbose=False)
    checkpoint = load_checkpoint(result.checkpoint)
    assert checkpoint.epoch == result.best_epoch
    assert checkpoint.metrics['val_dsc'] == pytest.approx(result.best_dsc)
    assert 'output_dir' not in checkpoint.run
    assert checkpoint.run['seed'] == 0


def test_divergence_writes_diagnostics(tiny_run, monkeypatch):
    monkeypatch.setattr(trainer_module, 'ds_loss', lambda outputs, target, cfg=None: Tensor(np.nan))
    run = tiny_run(seed=5)
    with pytest.raises(TrainingDivergedError) as info:
        train(run, verbose=False)
    assert (info.value.epoch, info.value.batch, info.value.seed) == (0, 0, 5)
    dump = json.loads((run.output_path / 'diverged.json').read_text())
    assert dump['epoch'] == 0 and dump['seed'] == 5
    assert len(dump['case_ids']) == 2
    assert get_training_run(run.output_path / DB_FILENAME, 1).status == 'diverged'


def test_training_records_runs_in_the_database(tiny_run):
    run = tiny_run(max_epochs=2, patience=2)
    result = train(run, verbose=False)
    db_path = run.output_path / DB_FILENAME
    row = get_training_run(db_path, 1)
    assert row.status == 'finished'
    assert row.epochs_run == result.epochs_run
    assert row.best_dsc == pytest.approx(result.best_dsc)
    records = get_epoch_records(db_path, 1)
    assert [r.epoch for r in records] == [0, 1]


def test_training_fires_events(tiny_run):
    seen = []
    handlers = [
        event_handler(Event.on_epoch_end)(lambda summary: seen.append(('epoch', summary.epoch))),
        event_handler(Event.on_training_finished)(lambda result: seen.append(('done', result.epochs_run))),
    ]
    try:
        train(tiny_run(max_epochs=2, patience=2, record_runs=False), verbose=False)
    finally:
        for handler in handlers:
            handler.unregister()
    assert seen == [('epoch', 0), ('epoch', 1), ('done', 2)]


def test_model_must_fit_the_dataset(tiny_run):
    with pytest.raises(ConfigError):
        train(tiny_run(model=replace(TINY_2D, in_channels=3)), verbose=False)


def test_smoothed_losses():
    history = [EpochSummary(i, 1e-3, float(i), 0.0, False) for i in range(7)]
    assert smoothed_losses(history, window=3) == [1.0, 4.0]


def test_ground_truth_scores_perfectly(data_2d):
    dataset = VolumeDataset(list_cases(data_2d))
    masks = iter([dataset[i].mask for i in range(len(dataset))])
    report = evaluate_predictions(dataset, lambda image: next(masks))
    assert len(report) == 4
    assert report.mean('dsc') == 1.0
    assert report.mean('jaccard') == 1.0
    assert report.mean('hd95') == 0.0


def test_evaluate_an_untrained_checkpoint(tiny_run, data_2d, tmp_path):
    result = train(tiny_run(max_epochs=1, patience=1), verbose=False)
    report_path = tmp_path / 'report.tsv'
    db_path = tmp_path / 'eval.sqlite'
    reports = evaluate([result.checkpoint], data_2d, report_path, verbose=False, db_path=db_path)
    parsed = MetricReport.from_text(report_path.read_text())
    assert [c.case for c in parsed.cases] == ['case_000', 'case_001', 'case_002', 'case_003']
    assert all(0.0 <= c.dsc <= 1.0 for c in parsed.cases)
    assert parsed.mean('dsc') == pytest.approx(reports[0].mean('dsc'), abs=1e-6)
    assert len(get_case_metrics(db_path, str(result.checkpoint))) == 4


def test_evaluate_several_folds_writes_an_average(tiny_run, data_2d, tmp_path):
    a = train(tiny_run(max_epochs=1, patience=1, output_dir=str(tmp_path / 'f0')), verbose=False)
    b = train(tiny_run(max_epochs=1, patience=1, seed=1, output_dir=str(tmp_path / 'f1')), verbose=False)
    report_path = tmp_path / 'report.tsv'
    reports = evaluate([a.checkpoint, b.checkpoint], data_2d, report_path, verbose=False)
    assert len(reports) == 2
    text = report_path.read_text()
    assert text.count('# ') == 3
    assert '# average over 2 folds' in text


@pytest.mark.slow
def test_overfits_four_cases(tmp_path):
    synth_dataset(tmp_path / 'data', 4, (32, 32, 32), 2, seed=0)
    model = replace(TINY_2D, mode=Mode.THREE_D, input_shape=(32, 32, 32), channels=(8, 16, 16, 32))
    run = RunConfig(model=model, lr=1e-2, max_epochs=100, patience=100, batch_size=2, augment=False,
                    data_dir=str(tmp_path / 'data'), output_dir=str(tmp_path / 'out'), record_runs=False)
    result = train(run, verbose=False)
    assert result.best_dsc > 0.95
    smoothed = smoothed_losses(result.history, window=5)
    assert len(smoothed) == result.epochs_run // 5
    assert all(later <= earlier for earlier, later in zip(smoothed, smoothed[1:]))
