from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from .command import Command

__all__ = (
    'HDenseFormerError', 'ShapeError', 'NonFiniteError', 'ConfigError', 'InvalidLabelError', 'MVolFormatError',
    'CheckpointError', 'TrainingDivergedError', 'InvalidArgumentsError', 'EmptyMaskWarning'
)


class HDenseFormerError(Exception):
    """base class for every error raised by this package"""


class ShapeError(HDenseFormerError):
    """
    contract violation: an operation received operands whose shapes it cannot combine
    """

    def __init__(self, op: str, *shapes, hint: str = ''):
        self.op: str = op
        self.shapes: tuple = tuple(tuple(s) for s in shapes)
        self.hint: str = hint
        message = f'{op}: incompatible shapes {", ".join(map(str, self.shapes))}'
        if hint:
            message = f'{message} ({hint})'
        super().__init__(message)


class NonFiniteError(HDenseFormerError):
    def __init__(self, op: str):
        self.op: str = op
        super().__init__(f'{op}: produced a non-finite value (NaN or Inf)')


class ConfigError(HDenseFormerError):
    def __init__(self, key: str, reason: str):
        self.key: str = key
        self.reason: str = reason
        super().__init__(f'invalid config value for "{key}": {reason}')


class InvalidLabelError(HDenseFormerError):
    def __init__(self, values):
        self.values = tuple(values)
        super().__init__(f'target mask must be binary (0/1), found values: {self.values}')


class MVolFormatError(HDenseFormerError):
    def __init__(self, path, reason: str):
        self.path = path
        self.reason: str = reason
        super().__init__(f'malformed volume file {path}: {reason}')


class CheckpointError(HDenseFormerError):
    def __init__(self, path, reason: str):
        self.path = path
        self.reason: str = reason
        super().__init__(f'bad checkpoint {path}: {reason}')


class TrainingDivergedError(HDenseFormerError):
    def __init__(self, epoch: int, batch: int, seed: int, loss: Optional[float], dump_path=None):
        self.epoch: int = epoch
        self.batch: int = batch
        self.seed: int = seed
        self.loss: Optional[float] = loss
        self.dump_path = dump_path
        super().__init__(f'non-finite training loss {loss} at epoch {epoch}, batch {batch} (seed {seed}), '
                         f'diagnostics written to {dump_path}')


class InvalidArgumentsError(Exception):
    """
    used to print a command's usage when the caller gives the command invalid arguments
    """

    # this is a default for if the class is raised without calling its init, ex: raise InvalidArgumentsError
    reason: str = 'invalid arguments'
    cmd: 'Command' = None

    def __init__(self, reason: str = reason, cmd: 'Command' = None):
        super().__init__(reason)
        self.cmd: 'Command' = cmd
        self.reason: str = reason


class EmptyMaskWarning(UserWarning):
    """a surface metric was requested for an empty mask, the result is the undefined sentinel"""
