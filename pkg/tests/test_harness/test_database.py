from sqlalchemy import inspect, orm

from hdenseformer.database import Base, get_engine


def test_models_share_one_declarative_registry(tmp_path):
    assert isinstance(Base.registry, orm.registry)
    engine = get_engine(tmp_path / 'runs.sqlite')
    assert set(inspect(engine).get_table_names()) == {'training_runs', 'epoch_records', 'case_metrics'}
