import pytest


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='also run tests marked as slow')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: desk-scale training runs, skipped unless --runslow is given')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path, monkeypatch):
    """the harness config is created relative to the working directory"""
    monkeypatch.chdir(tmp_path)
    import hdenseformer.config as config
    monkeypatch.setattr(config, '_cfg', None)
