from hdenseformer import commands

with open('commands.md', 'w') as out:
    out.write('# Builtin Commands: \n')
    out.write('## index\n')

    names = sorted({command.name for command in commands.values()})
    for name in names:
        out.write(f'\n* [{name}](#{name})')

    for name in names:
        command = commands[name]
        out.write(f"""

## {command.name}
NAME: {command.name}

ALIASES: {', '.join(command.aliases) or 'NO ALIASES'}

SYNTAX: {command.syntax or 'NO SYNTAX'}

HELP: {command.help or 'NO HELP'}

[[back to index](#index)]
""")
