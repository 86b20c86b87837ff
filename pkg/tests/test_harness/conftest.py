import pytest

from hdenseformer.data import synth_dataset
from hdenseformer.enums import Mode
from hdenseformer.model import ModelConfig
from hdenseformer.training import RunConfig

TINY_2D = ModelConfig(mode=Mode.TWO_D, in_channels=2, input_shape=(32, 32), embed_dim=16, fused_channels=8, growth=8,
                      layers_per_block=2, heads=2, dct_depth=1, channels=(4, 4, 8, 8))


@pytest.fixture
def data_2d(tmp_path):
    """four 32x32 cases with two modalities"""
    synth_dataset(tmp_path / 'data', 4, (32, 32), 2, seed=0)
    return tmp_path / 'data'


@pytest.fixture
def tiny_run(data_2d, tmp_path):
    def make(**changes) -> RunConfig:
        settings = dict(model=TINY_2D, max_epochs=3, patience=3, batch_size=2, data_dir=str(data_2d),
                        output_dir=str(tmp_path / 'out'))
        settings.update(changes)
        return RunConfig(**settings).validate()

    return make
