"""
forest-kernel entry point.
"""

import logging
import sys
from typing import List, Optional

from .cli import COMMANDS, build_parser
from .config import Settings
from .errors import ForestKernelError
from .logger import setup_logging

logger = logging.getLogger(__name__)

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_ERROR = 2


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command.

    Returns:
        0 when every check passed, 1 when a check failed, 2 on usage, parse,
        limit or domain errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 for --help
        return e.code if isinstance(e.code, int) else EXIT_ERROR

    try:
        settings = Settings()
    except ValueError as e:
        print(f"error: invalid FOREST_KERNEL_* settings: {e}", file=sys.stderr)
        return EXIT_ERROR
    setup_logging(settings, args.log_level)

    logger.info(f"Running {args.command}")
    try:
        result = COMMANDS[args.command](args, settings)
    except ForestKernelError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    report = result.report
    if result.text is not None:
        sys.stdout.write(result.text)
    elif args.json:
        print(report.to_json())
    else:
        print(report.render_text())

    logger.info(f"{args.command} finished: {'PASS' if report.passed else 'FAIL'}")
    return EXIT_PASSED if report.passed else EXIT_FAILED
