import asyncio
import sys

import unsupervised_gap

_commands = {
    'gen-data': lambda: unsupervised_gap.DatasetGenerator.main(),
    'train': lambda: unsupervised_gap.Trainer.main(),
    'eval': lambda: unsupervised_gap.Evaluator.main(),
    'benchmark': lambda: unsupervised_gap.Benchmark.main(),
    'sweep': lambda: unsupervised_gap.Sweep.main(),
    'dump': lambda: unsupervised_gap.Dump.main(),
    'd': lambda: unsupervised_gap.Dump.main(),
}


def main():
    args = sys.argv
    if len(args) < 2 or args[1] not in _commands:
        commands = ', '.join(name for name in _commands if name != 'd')
        print(f'usage: unsupervised-gap {{{commands}}} ...', file=sys.stderr)
        sys.exit(2)
    sub_command = args[1]
    del args[1]
    try:
        asyncio.run(_commands[sub_command]())
    except (unsupervised_gap.GapError, OSError, ValueError) as e:
        print(f'error: {e.__class__.__name__}: {e}'.splitlines()[0],
              file=sys.stderr)
        sys.exit(1)


if __name__ == '__main__':
    main()
