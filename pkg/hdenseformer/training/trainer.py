import json
import math
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from ..data import VolumeDataset, iterate_batches, kfold_split, list_cases
from ..database import EpochRecord, TrainingRun, DB_FILENAME, add_epoch_record, add_training_run, \
    finish_training_run
from ..enums import Event
from ..events import trigger_event
from ..exceptions import ConfigError, NonFiniteError, TrainingDivergedError
from ..loss import ds_loss
from ..metrics import dsc
from ..model import HDenseFormer, build_model
from ..tensor import Tensor
from .checkpoint import save_checkpoint
from .optim import Adam
from .run_config import RunConfig
from .schedule import poly_lr

__all__ = ('EpochSummary', 'TrainingResult', 'train', 'validation_dsc', 'check_compatible', 'smoothed_losses',
           'run_echo', 'LOG_FILE', 'CHECKPOINT_FILE', 'DIVERGED_FILE')

LOG_FILE = 'train.log'
CHECKPOINT_FILE = 'best.ckpt'
DIVERGED_FILE = 'diverged.json'


class EpochSummary(NamedTuple):
    epoch: int
    lr: float
    train_loss: float
    val_dsc: float
    improved: bool

    def to_line(self) -> str:
        return (f'epoch={self.epoch} lr={self.lr:.6e} train_loss={self.train_loss:.6f} '
                f'val_dsc={self.val_dsc:.6f} improved={int(self.improved)}')


class TrainingResult(NamedTuple):
    checkpoint: Path
    log: Path
    best_epoch: int
    best_dsc: float
    epochs_run: int
    stopped_early: bool
    history: List[EpochSummary]


def check_compatible(model_cfg, dataset: VolumeDataset):
    """raises ConfigError if the dataset's modality count or padded extents differ from the model's"""
    if dataset.modalities != model_cfg.in_channels:
        raise ConfigError('model.in_channels', f'the model expects {model_cfg.in_channels} modalities, '
                                               f'the dataset holds {dataset.modalities}')
    if tuple(dataset.spatial) != tuple(model_cfg.input_shape):
        raise ConfigError('model.input_shape', f'the model expects extents {tuple(model_cfg.input_shape)}, '
                                               f'the (padded) dataset has {tuple(dataset.spatial)}')


def validation_dsc(model: HDenseFormer, dataset: VolumeDataset) -> float:
    """mean foreground DSC of the argmax of O^0 over the dataset's cases"""
    scores = []
    for i in range(len(dataset)):
        stack = dataset[i]
        pred = model.predict(stack.image[np.newaxis])[0]
        scores.append(dsc(pred, stack.mask))
    return float(np.mean(scores))


def run_echo(run: RunConfig) -> dict:
    """the run settings stored in checkpoints, without the folder paths so the bytes do not depend on them"""
    data = run.to_dict()
    for key in ('data_dir', 'output_dir'):
        data.pop(key)
    return data


def _dump_divergence(out_dir: Path, run: RunConfig, epoch: int, batch, loss: Optional[float]) -> Path:
    path = out_dir / DIVERGED_FILE
    with open(path, 'w') as file:
        json.dump({
            'epoch': epoch,
            'batch': batch.index,
            'case_ids': list(batch.case_ids),
            'seed': run.seed,
            'loss': None if loss is None else repr(loss),
        }, file, indent=2, sort_keys=True)
    return path


def _train_epoch(model: HDenseFormer, optimizer: Adam, dataset: VolumeDataset, run: RunConfig, epoch: int,
                 out_dir: Path) -> float:
    losses = []
    batches = iterate_batches(dataset, run.effective_batch_size, seed=run.seed, epoch=epoch, shuffle=True,
                              augment=run.augment, flip=run.flip, rotate=run.rotate,
                              prefetch=not run.deterministic)
    for batch in batches:
        optimizer.zero_grad()
        try:
            loss = ds_loss(model(Tensor(batch.images)), batch.masks, run.loss)
            value = loss.item()
        except NonFiniteError:
            value = None
        if value is None or not math.isfinite(value):
            dump = _dump_divergence(out_dir, run, epoch, batch, value)
            raise TrainingDivergedError(epoch, batch.index, run.seed, value, dump)

        loss.backward()
        optimizer.step()
        losses.append(value)
    return float(np.mean(losses))


def train(run: RunConfig, verbose: bool = True) -> TrainingResult:
    """
    trains one fold (or every case when run.fold is None) with Adam + PolyLR and the deep
    supervision loss, keeps the checkpoint with the best validation DSC and stops once
    `patience` epochs in a row brought no strict improvement

    output folder contents:
        best.ckpt       best model and optimizer state, rewritten atomically on improvement
        train.log       one key=value line per epoch, appended
        diverged.json   written only when the loss turns non-finite
        runs.sqlite     run records, if run.record_runs
    """
    run.validate()
    out_dir = run.output_path
    out_dir.mkdir(parents=True, exist_ok=True)

    train_cases, val_cases = kfold_split(list_cases(run.data_path), run.folds, run.fold, run.seed)
    train_set, val_set = VolumeDataset(train_cases), VolumeDataset(val_cases)
    check_compatible(run.model, train_set)

    model = build_model(run.model, run.seed)
    optimizer = Adam(model.parameters(), lr=run.lr, betas=run.betas, eps=run.adam_eps,
                     weight_decay=run.weight_decay)

    db_path = out_dir / DB_FILENAME
    run_id = None
    if run.record_runs:
        run_id = add_training_run(db_path, TrainingRun.create(str(out_dir), run.seed, run.fold, run.to_dict()))

    if verbose:
        print(f'[TRAIN] {len(train_set)} training / {len(val_set)} validation cases, '
              f'{model.num_parameters()} parameters, fold={run.fold}, seed={run.seed}')
    trigger_event(Event.on_training_started, run, model)

    log_path = out_dir / LOG_FILE
    checkpoint_path = out_dir / CHECKPOINT_FILE
    history: List[EpochSummary] = []
    best_dsc, best_epoch, stale, stopped_early = -math.inf, -1, 0, False

    try:
        for epoch in range(run.max_epochs):
            optimizer.lr = poly_lr(epoch, run.max_epochs, run.lr, run.poly_exponent)
            train_loss = _train_epoch(model, optimizer, train_set, run, epoch, out_dir)
            val_dsc = validation_dsc(model, val_set)

            improved = val_dsc > best_dsc
            if improved:
                best_dsc, best_epoch, stale = val_dsc, epoch, 0
                save_checkpoint(checkpoint_path, model, optimizer, epoch=epoch, metrics={'val_dsc': val_dsc},
                                run=run_echo(run))
                trigger_event(Event.on_checkpoint_saved, checkpoint_path, epoch, val_dsc)
            else:
                stale += 1

            summary = EpochSummary(epoch, optimizer.lr, train_loss, val_dsc, improved)
            history.append(summary)
            with open(log_path, 'a') as file:
                file.write(summary.to_line() + '\n')
            if run_id is not None:
                add_epoch_record(db_path, EpochRecord.create(run_id, epoch, optimizer.lr, train_loss, val_dsc))
            if verbose:
                print(f'[TRAIN] {summary.to_line()}')
            trigger_event(Event.on_epoch_end, summary)

            if stale >= run.patience:
                stopped_early = True
                if verbose:
                    print(f'[TRAIN] no improvement for {stale} epochs, stopping after epoch {epoch}')
                trigger_event(Event.on_early_stop, epoch, best_epoch, best_dsc)
                break
    except TrainingDivergedError:
        if run_id is not None:
            finish_training_run(db_path, run_id, best_epoch, best_dsc if best_epoch >= 0 else None, len(history),
                                False, status='diverged')
        raise

    result = TrainingResult(checkpoint_path, log_path, best_epoch, best_dsc, len(history), stopped_early, history)
    if run_id is not None:
        finish_training_run(db_path, run_id, best_epoch, best_dsc, len(history), stopped_early)
    if verbose:
        print(f'[TRAIN] best val_dsc={best_dsc:.6f} at epoch {best_epoch}, checkpoint: {checkpoint_path}')
    trigger_event(Event.on_training_finished, result)
    return result


def smoothed_losses(history: Sequence[EpochSummary], window: int = 5) -> List[float]:
    """train losses averaged over consecutive non-overlapping windows of `window` epochs"""
    losses = [s.train_loss for s in history]
    return [float(np.mean(losses[i:i + window])) for i in range(0, len(losses) - window + 1, window)]
