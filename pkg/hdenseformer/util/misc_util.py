import argparse
from typing import Sequence, Tuple, TYPE_CHECKING

import numpy as np

from ..exceptions import InvalidArgumentsError

if TYPE_CHECKING:
    from ..command import Command

__all__ = ('CommandArgumentParser', 'parse_extents', 'parse_floats')


class CommandArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises InvalidArgumentsError for its command instead of exiting"""

    def __init__(self, cmd: 'Command', **kwargs):
        super().__init__(prog=cmd.name, description=cmd.help, add_help=False, **kwargs)
        self.cmd = cmd

    def error(self, message):
        raise InvalidArgumentsError(reason=message, cmd=self.cmd)

    def parse_args(self, args: Sequence[str] = None, namespace=None):
        return super().parse_args(list(args or ()), namespace)


def parse_extents(text: str) -> Tuple[int, ...]:
    """'32x32x32' -> (32, 32, 32)"""
    try:
        extents = tuple(int(part) for part in text.lower().split('x'))
    except ValueError:
        raise argparse.ArgumentTypeError(f'extents must look like 32x32x32, got {text!r}') from None
    if len(extents) not in (2, 3) or min(extents) < 1:
        raise argparse.ArgumentTypeError(f'expected 2 or 3 positive extents, got {text!r}')
    return extents


def parse_floats(text: str) -> Tuple[float, ...]:
    """'1,1,2.5' -> (1.0, 1.0, 2.5)"""
    try:
        values = tuple(float(part) for part in text.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma separated numbers, got {text!r}') from None
    if not all(np.isfinite(values)) or min(values) <= 0:
        raise argparse.ArgumentTypeError(f'expected positive numbers, got {text!r}')
    return values
