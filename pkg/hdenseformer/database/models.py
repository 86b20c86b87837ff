import json
import math
from typing import Optional

from sqlalchemy import Column, Integer, String, Float, Boolean, Text, ForeignKey

from .session import Base

__all__ = ('TrainingRun', 'EpochRecord', 'CaseMetricRecord')


class TrainingRun(Base):
    __tablename__ = 'training_runs'

    id = Column(Integer, primary_key=True, nullable=False)
    output_dir = Column(String(1024), nullable=False)
    seed = Column(Integer, nullable=False)
    fold = Column(Integer)
    config = Column(Text, nullable=False)
    best_epoch = Column(Integer)
    best_dsc = Column(Float)
    epochs_run = Column(Integer, nullable=False, default=0)
    stopped_early = Column(Boolean, nullable=False, default=False)
    status = Column(String(32), nullable=False, default='running')

    @classmethod
    def create(cls, output_dir: str, seed: int, fold: Optional[int], config: dict):
        return TrainingRun(output_dir=str(output_dir), seed=seed, fold=fold,
                           config=json.dumps(config, sort_keys=True), epochs_run=0, stopped_early=False,
                           status='running')


class EpochRecord(Base):
    __tablename__ = 'epoch_records'

    id = Column(Integer, primary_key=True, nullable=False)
    run_id = Column(Integer, ForeignKey('training_runs.id'), nullable=False)
    epoch = Column(Integer, nullable=False)
    lr = Column(Float, nullable=False)
    train_loss = Column(Float, nullable=False)
    val_dsc = Column(Float, nullable=False)

    @classmethod
    def create(cls, run_id: int, epoch: int, lr: float, train_loss: float, val_dsc: float):
        return EpochRecord(run_id=run_id, epoch=epoch, lr=lr, train_loss=train_loss, val_dsc=val_dsc)


class CaseMetricRecord(Base):
    __tablename__ = 'case_metrics'

    id = Column(Integer, primary_key=True, nullable=False)
    checkpoint = Column(String(1024), nullable=False)
    case_id = Column(String(255), nullable=False)
    dsc = Column(Float, nullable=False)
    jaccard = Column(Float, nullable=False)
    # NULL for an undefined hd95
    hd95 = Column(Float)

    @classmethod
    def create(cls, checkpoint: str, case_id: str, dsc: float, jaccard: float, hd95: float):
        return CaseMetricRecord(checkpoint=str(checkpoint), case_id=case_id, dsc=dsc, jaccard=jaccard,
                                hd95=None if math.isnan(hd95) else hd95)
