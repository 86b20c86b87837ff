from typing import List, Optional

from ..metrics import MetricReport
from .models import TrainingRun, EpochRecord, CaseMetricRecord
from .session import open_session

__all__ = ('add_training_run', 'add_epoch_record', 'finish_training_run', 'get_training_run', 'get_epoch_records',
           'add_case_metrics', 'get_case_metrics')


def add_training_run(db_path, run: TrainingRun) -> int:
    """adds the run row and returns its id"""
    assert isinstance(run, TrainingRun), 'run must be of type TrainingRun'
    session = open_session(db_path)
    try:
        session.add(run)
        session.commit()
        return run.id
    finally:
        session.close()


def add_epoch_record(db_path, record: EpochRecord):
    assert isinstance(record, EpochRecord), 'record must be of type EpochRecord'
    session = open_session(db_path)
    try:
        session.add(record)
        session.commit()
    finally:
        session.close()


def finish_training_run(db_path, run_id: int, best_epoch: Optional[int], best_dsc: Optional[float],
                        epochs_run: int, stopped_early: bool, status: str = 'finished'):
    session = open_session(db_path)
    try:
        session.query(TrainingRun).filter(TrainingRun.id == run_id).update({
            TrainingRun.best_epoch: best_epoch,
            TrainingRun.best_dsc: best_dsc,
            TrainingRun.epochs_run: epochs_run,
            TrainingRun.stopped_early: stopped_early,
            TrainingRun.status: status,
        })
        session.commit()
    finally:
        session.close()


def get_training_run(db_path, run_id: int) -> Optional[TrainingRun]:
    session = open_session(db_path)
    try:
        return session.query(TrainingRun).filter(TrainingRun.id == run_id).one_or_none()
    finally:
        session.close()


def get_epoch_records(db_path, run_id: int) -> List[EpochRecord]:
    session = open_session(db_path)
    try:
        return session.query(EpochRecord).filter(EpochRecord.run_id == run_id).order_by(EpochRecord.epoch).all()
    finally:
        session.close()


def add_case_metrics(db_path, checkpoint: str, report: MetricReport):
    session = open_session(db_path)
    try:
        session.add_all(CaseMetricRecord.create(checkpoint, case.case, case.dsc, case.jaccard, case.hd95)
                        for case in report.cases)
        session.commit()
    finally:
        session.close()


def get_case_metrics(db_path, checkpoint: str = None) -> List[CaseMetricRecord]:
    session = open_session(db_path)
    try:
        query = session.query(CaseMetricRecord)
        if checkpoint is not None:
            query = query.filter(CaseMetricRecord.checkpoint == str(checkpoint))
        return query.order_by(CaseMetricRecord.id).all()
    finally:
        session.close()
