# Severity Curriculum - Arabic medical QA generation

import argparse
import logging
import sys

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def configure_logging(level='INFO'):
    """Configure root logging once per process"""
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(level.upper())


def common_options():
    """Options every subcommand accepts"""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--config', help='JSON config file')
    parser.add_argument('--seed', type=int, help='run seed; every component seed derives from it')
    parser.add_argument('--log-level', dest='log_level', help='DEBUG, INFO, WARNING or ERROR')
    parser.add_argument('--print-config', action='store_true', help='print the resolved config and exit')
    return parser


def create_app():
    """Command-line application factory"""
    parser = argparse.ArgumentParser(
        prog='sevcur',
        description='Severity-based curriculum learning for Arabic medical question answering',
    )
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    parents = [common_options()]

    # Register command groups
    from commands import data, evaluate, text, train

    text.register(subparsers, parents)
    data.register(subparsers, parents)
    train.register(subparsers, parents)
    evaluate.register(subparsers, parents)

    return parser
