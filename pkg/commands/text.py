# Severity Curriculum - Arabic medical QA generation

import sys
from contextlib import contextmanager

from utils.arabic_text import normalize


@contextmanager
def open_text(path, mode='r'):
    """A UTF-8 file, or stdin/stdout when no path is given"""
    if path is None or path == '-':
        yield sys.stdin if mode == 'r' else sys.stdout
        return
    with open(path, mode, encoding='utf-8') as handle:
        yield handle


def register(subparsers, parents):
    parser = subparsers.add_parser('normalize', parents=parents, help='normalize Arabic text line by line')
    parser.add_argument('--in', dest='input', help='input text file (default: stdin)')
    parser.add_argument('--out', dest='output', help='output text file (default: stdout)')
    parser.set_defaults(handler=normalize_command)


def normalize_command(args, config):
    """Stream-normalize text lines"""
    with open_text(args.input) as source, open_text(args.output, 'w') as target:
        for line in source:
            target.write(normalize(line.rstrip('\n')))
            target.write('\n')
    return 0
