from pathlib import Path
from typing import Dict

from sqlalchemy import create_engine, orm
from sqlalchemy.engine import Engine
from sqlalchemy.orm import declarative_base

__all__ = ('Base', 'DB_FILENAME', 'get_engine', 'open_session', 'init_tables')

Base = declarative_base()
DB_FILENAME = 'runs.sqlite'

_engines: Dict[str, Engine] = {}


def get_engine(db_path) -> Engine:
    """one engine per database file, the tables are created on first use"""
    key = str(Path(db_path).resolve())
    if key not in _engines:
        Path(key).parent.mkdir(parents=True, exist_ok=True)
        engine = create_engine(f'sqlite:///{key}')
        init_tables(engine)
        _engines[key] = engine
    return _engines[key]


def open_session(db_path) -> orm.Session:
    return orm.sessionmaker(bind=get_engine(db_path))()


def init_tables(engine: Engine):
    Base.metadata.create_all(engine)
