"""
Command-line entry point: gacem run | bench | eval | sample

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
import sys
import traceback

from parse_args import Parse
from errors     import ConfigError


def main(argv=None):
    try:
        parse = Parse(argv)
        args  = parse.get_args()

        if parse.command == 'run':
            from train import train
            train(**args)

        elif parse.command == 'bench':
            from bench import bench
            bench(**args)

        elif parse.command == 'eval':
            from eval import eval
            eval(**args)

        else:
            from eval import sample
            sample(**args)

        # END IF

    except SystemExit as err:
        # argparse reports usage errors with exit status 2
        return err.code if isinstance(err.code, int) else 2

    except ConfigError as err:
        print('Configuration error: {}'.format(err), file=sys.stderr)
        return 2

    except Exception as err:
        traceback.print_exc()
        print('Run failed: {}: {}'.format(type(err).__name__, err), file=sys.stderr)
        return 1

    return 0


if __name__ == '__main__':
    sys.exit(main())
