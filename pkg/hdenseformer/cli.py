import sys
from typing import Optional, Sequence

from .command import get_command
from .exceptions import HDenseFormerError, InvalidArgumentsError
from . import builtin_commands
from .builtin_commands.misc_commands import command_index

__all__ = ('main', 'EXIT_OK', 'EXIT_FAILURE', 'EXIT_USAGE')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    runs the command named by argv[0] with the remaining arguments

    returns the command's exit status, 2 for unknown commands or invalid arguments
    and 1 for errors raised while the command ran
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ('-h', '--help'):
        print(command_index())
        return EXIT_OK if argv else EXIT_USAGE

    cmd = get_command(argv[0])
    if cmd is None:
        print(f'unknown command "{argv[0]}"', file=sys.stderr)
        print(command_index(), file=sys.stderr)
        return EXIT_USAGE

    try:
        return cmd.execute(argv[1:])
    except InvalidArgumentsError as e:
        usage = (e.cmd or cmd).usage
        print(f'invalid arguments for {cmd.name}: {e.reason}\n{usage}', file=sys.stderr)
        return EXIT_USAGE
    except HDenseFormerError as e:
        print(f'[ERROR] {type(e).__name__}: {e}', file=sys.stderr)
        return EXIT_FAILURE
