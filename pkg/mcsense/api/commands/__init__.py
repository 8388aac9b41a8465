# mcsense/api/commands/__init__.py - Shared plumbing for command handlers

import argparse
import json
import logging
from typing import Any, Callable, Dict

from pydantic import ValidationError

from ... import __version__
from ...config import CORRELATION_LENGTHS
from ...models import CliConfig
from ..services.errors import InvalidArgumentError, McSenseError, NumericalFailureError

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace], None]

# namespace entries that are plumbing, not run configuration
_INTERNAL_KEYS = {"handler", "command", "log_level", "config"}


def cli_header(args: argparse.Namespace, **resolved: Any) -> Dict[str, Any]:
    """Fully resolved configuration echoed next to every output."""
    options = {key: value for key, value in vars(args).items() if key not in _INTERNAL_KEYS}
    header = CliConfig(
        subcommand=args.command,
        options=options,
        config_file=getattr(args, "config", None),
        version=__version__,
        correlation_lengths=dict(CORRELATION_LENGTHS),
        resolved=resolved,
    ).header()
    logger.info(f"🧾 Run configuration: {json.dumps(header, sort_keys=True)}")
    return header


def run_command(handler: Handler, args: argparse.Namespace) -> int:
    """Run a handler and map failures to exit codes (1 invalid input, 2 numerical failure)."""
    try:
        handler(args)
        return 0
    except McSenseError as e:
        logger.error(f"❌ {args.command} failed: {e.detail}")
        return e.exit_code
    except ValidationError as e:
        logger.error(f"❌ {args.command} got invalid parameters: {e}")
        return InvalidArgumentError.exit_code
    except OSError as e:
        logger.error(f"❌ {args.command} could not access a file: {e}")
        return InvalidArgumentError.exit_code
    except Exception as e:
        logger.exception(f"❌ {args.command} failed unexpectedly: {e}")
        return NumericalFailureError.exit_code
