import os
import json
from pathlib import Path
from typing import Optional

from .exceptions import ConfigError

__all__ = ('cfg', 'Config', 'CONFIG_FOLDER', 'HARNESS_DEFAULTS', 'get_cfg', 'resolve_env', 'get_output_dir',
           'get_data_dir')

CONFIG_FOLDER = Path('configs')


# noinspection PyTypeChecker
class Config:
    def __init__(self, file_path: Path, **defaults):
        self.file_path = Path(file_path)
        self.data = {}
        self.defaults = defaults

        self.load()
        self._validate()

    def _validate(self):
        """checks that all default keys are present"""
        missing = [k for k in self.defaults if k not in self.data]
        for k in missing:
            self.data[k] = self.defaults[k]

        if missing:
            self.save()

    @property
    def exist(self):
        """returns if the config file exist"""
        return self.file_path.exists()

    def regen(self):
        """restores config file to its default state and values"""
        self.create(overwrite=True)
        self.load()

    def save(self):
        """updates the config file with the current config data"""
        with open(self.file_path, 'w') as file:
            json.dump(self.data, file, indent=2, sort_keys=True)
            file.write('\n')

    def load(self):
        """
        loads the config file's contents into this config object's `data` attribute
        creates the config if it doesnt exist
        """
        if not self.exist:
            self.create()

        try:
            with open(self.file_path) as file:
                self.data = json.load(file)
        except ValueError as e:
            raise ConfigError(str(self.file_path), f'not a valid JSON config file: {e}') from None

        if not isinstance(self.data, dict):
            raise ConfigError(str(self.file_path), 'the config file must hold a JSON object')

    def create(self, overwrite=False):
        """creates the config json file, does nothing if it already exist, except if `overwrite` is True"""
        if self.exist and not overwrite:
            return

        self.file_path.parent.mkdir(parents=True, exist_ok=True)
        self.data = dict(self.defaults)
        self.save()

    def __getattr__(self, item):
        """allows for getting config values by accessing a attribute"""
        return self.__dict__[item] if item in self.__dict__ else self.__dict__.get('data', {}).get(item)

    def __getitem__(self, item):
        return self.__getattr__(item)

    def __setitem__(self, key, value):
        self.data[key] = value
        self.save()

    def __contains__(self, item):
        return item in self.data

    def __iter__(self):
        yield from self.data.items()


HARNESS_DEFAULTS = dict(
    output_dir='runs',
    data_dir='data',
    seed=0,
)

_cfg: Optional[Config] = None


def get_cfg() -> Config:
    """the harness-wide config at configs/hdenseformer.json, created on first use"""
    global _cfg
    if _cfg is None:
        _cfg = Config(CONFIG_FOLDER / 'hdenseformer.json', **HARNESS_DEFAULTS)
    return _cfg


class _LazyConfig:
    def __getattr__(self, item):
        return getattr(get_cfg(), item)

    def __getitem__(self, item):
        return get_cfg()[item]

    def __setitem__(self, key, value):
        get_cfg()[key] = value

    def __contains__(self, item):
        return item in get_cfg()


cfg = _LazyConfig()


def resolve_env(value, key: str = 'value'):
    """
    resolves `ENV_NAME` strings to os.environ['NAME'], any other value is returned unchanged

    raises ConfigError naming `key` if the variable is not set
    """
    if not isinstance(value, str) or not _is_env_key(value):
        return value
    resolved = _get_env_value(value)
    if resolved is None:
        raise ConfigError(key, f'could not get {key} from environment with key: {value[4:]}')
    return resolved


def get_output_dir() -> Path:
    return Path(resolve_env(cfg.output_dir, 'output_dir'))


def get_data_dir() -> Path:
    return Path(resolve_env(cfg.data_dir, 'data_dir'))


def _is_env_key(key) -> bool:
    return key.lower().startswith('env_')


def _get_env_value(key) -> Optional[str]:
    if key.lower().startswith('env_'):
        key = key[4:]

    return os.environ.get(key)
