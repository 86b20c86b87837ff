from typing import Callable, Dict, List, Optional, Sequence

__all__ = ('Command', 'commands', 'command_exist', 'get_command')


class Command:
    def __init__(self, name: str, func: Callable = None, global_command: bool = True, syntax: str = None,
                 help: str = None, aliases: List[str] = None):
        """
        :param name: name of the command, the first command-line argument
        :param func: the function that the commands executes, it receives the remaining arguments as strings
                     and returns an exit status (None counts as 0)
        :param global_command: should the command be registered globally?
        :param syntax: help message for how to use the command, <> is required, () is optional
        :param help: help message for the command, used with the `help` command
        :param aliases: aliases for this same command, only works if global_command is True
        """
        self.aliases: List[str] = aliases if aliases is not None else []
        self.help: str = help
        self.syntax: str = syntax
        self.func: Callable = func
        self.name: str = name.lower()

        if global_command:
            commands[self.name] = self

            # register all aliases passed to this functions
            for alias in self.aliases:
                commands[alias.lower()] = self

    @property
    def usage(self) -> str:
        return f'usage: {self.name} {self.syntax or ""}'.rstrip()

    def execute(self, args: Sequence[str]) -> int:
        return int(self.func(*args) or 0)

    # decorator support
    def __call__(self, func) -> 'Command':
        self.func = func
        return self

    def __str__(self):
        return f'<{self.__class__.__name__} name={repr(self.name)}>'


commands: Dict[str, Command] = {}


def command_exist(name: str) -> bool:
    return name.lower() in commands


def get_command(name: str) -> Optional[Command]:
    """gets a command by name or alias, returns None if not exist"""
    return commands.get(name.lower())
