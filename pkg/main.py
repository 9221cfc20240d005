# Severity Curriculum - Arabic medical QA generation

import json
import sys

from app import configure_logging, create_app
from config import resolve_config

TOP_LEVEL_FLAGS = ('seed', 'lexicon_path', 'train_fraction', 'log_level')


def collect_flags(args):
    """Config overrides from parsed flags; section options use a SECTION__FIELD dest"""
    flags = {}
    for key, value in vars(args).items():
        if value is None:
            continue
        if '__' in key:
            section, option = key.split('__', 1)
            flags.setdefault(section, {})[option] = value
        elif key in TOP_LEVEL_FLAGS:
            flags[key] = value
    return flags


def _report(error):
    message = ' '.join(str(error).split())
    print(f'error: {type(error).__name__}: {message}', file=sys.stderr)


def main(argv=None):
    parser = create_app()
    args = parser.parse_args(argv)
    if getattr(args, 'handler', None) is None:
        parser.print_help(sys.stderr)
        return 2

    try:
        config = resolve_config(args.config, flags=collect_flags(args))
        configure_logging(config.log_level)
        if args.print_config:
            print(json.dumps(config.to_dict(), ensure_ascii=False, indent=2, sort_keys=True))
            return 0
        return args.handler(args, config) or 0
    except ValueError as e:
        # PipelineError and config validation errors
        _report(e)
        return 1
    except OSError as e:
        _report(e)
        return 2


if __name__ == '__main__':
    sys.exit(main())
