from enum import Enum, auto

__all__ = ('Event', 'Mode', 'TransformerKind', 'EmbeddingPaths', 'InterpolationMode')


class NamedEnum(Enum):
    def _generate_next_value_(self, start, count, last_values):
        return self


class Mode(Enum):
    TWO_D = '2d'
    THREE_D = '3d'

    @property
    def ndim(self) -> int:
        """number of spatial axes"""
        return 2 if self is Mode.TWO_D else 3


class TransformerKind(Enum):
    DCT = 'dct'
    STANDARD = 'standard'


class EmbeddingPaths(Enum):
    MULTI = 'multi'
    SINGLE = 'single'


class InterpolationMode(Enum):
    NEAREST = 'nearest'
    LINEAR = 'linear'


class Event(NamedEnum):
    on_training_started = auto()
    on_epoch_end = auto()
    on_checkpoint_saved = auto()
    on_early_stop = auto()
    on_training_finished = auto()
    on_case_evaluated = auto()
