from ..command import Command, commands, get_command
from ..exceptions import InvalidArgumentsError


def command_index() -> str:
    names = sorted({cmd.name for cmd in commands.values()})
    return 'commands: ' + ', '.join(names)


@Command('commands', help='lists all commands')
def cmd_commands(*args):
    print(command_index())


@Command(name='help', syntax='<command>', help='gets the help text for a command')
def cmd_help(*args):
    if not args:
        raise InvalidArgumentsError(reason='missing required argument', cmd=cmd_help)

    cmd = get_command(args[0])
    if not cmd:
        raise InvalidArgumentsError(reason=f'command not found', cmd=cmd_help)

    print(f'help for {cmd.name} - syntax: {cmd.syntax or "no arguments"} - help: {cmd.help}')
