# mcsense/main.py - Command-line entry point

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .api.commands import bench, diagnose, field, mask, run_command, solve
from .api.services.errors import InvalidArgumentError
from .config import CORRELATION_LENGTHS, get_settings

logger = logging.getLogger(__name__)


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(InvalidArgumentError.exit_code, f"{self.prog}: error: {message}\n")


class VersionAction(argparse.Action):
    def __init__(self, option_strings, dest=argparse.SUPPRESS, default=argparse.SUPPRESS, help=None):
        super().__init__(option_strings, dest=dest, default=default, nargs=0, help=help)

    def __call__(self, parser, namespace, values, option_string=None):
        print(f"mcsense {__version__}")
        print(f"correlation lengths: {json.dumps(CORRELATION_LENGTHS, sort_keys=True)}")
        parser.exit(0)


def build_parser() -> CliParser:
    parser = CliParser(prog="mcsense", description="Matrix completion for sensor-grid data")
    parser.add_argument("--version", action=VersionAction, help="print version and calibrated constants")
    parser.add_argument("--log-level", default=None, help="overrides MCSENSE_LOG_LEVEL")
    parser.add_argument("--config", default=None, help="JSON file whose keys override command flags")

    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    for module in (field, mask, solve, bench, diagnose):
        module.register(subparsers)
    return parser


def apply_config(args: argparse.Namespace, path: str) -> None:
    """Override parsed flags with the keys of a JSON config file."""
    try:
        overrides = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InvalidArgumentError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise InvalidArgumentError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(overrides, dict):
        raise InvalidArgumentError(f"config file {path} must hold a JSON object")

    unknown = []
    for key, value in overrides.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest in {"handler", "command", "config"} or not hasattr(args, dest):
            unknown.append(key)
            continue
        setattr(args, dest, value)
    if unknown:
        raise InvalidArgumentError(f"config file {path} has keys unknown to '{args.command}': {unknown}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        level = (args.log_level or get_settings().log_level).upper()
        logging.basicConfig(level=getattr(logging, level, logging.INFO))
        if args.config:
            apply_config(args, args.config)
    except (InvalidArgumentError, ValueError) as e:
        logging.getLogger(__name__).error(f"❌ {e}")
        return InvalidArgumentError.exit_code

    return run_command(args.handler, args)


if __name__ == "__main__":
    sys.exit(main())
