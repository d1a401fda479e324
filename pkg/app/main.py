import argparse
import logging
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

from pydantic import ValidationError

from app.commands import compare, evaluate, generate, roc, simulate, train
from app.commands.common import positive_int
from app.errors import ArgumentError, FormatError
from app.settings import settings

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL.upper()),
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    stream=sys.stderr,
)
logger = logging.getLogger(__name__)

PROG = "qres"
EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

COMMANDS = [generate, train, evaluate, roc, simulate, compare]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG, description="Hybrid quantum-classical 3D volume classifier"
    )
    parser.add_argument(
        "--threads",
        type=positive_int,
        help="worker threads (default: QRES_THREADS, else available cores)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    threads = args.threads or settings.thread_count
    logger.info(f"Invocation: {shlex.join([PROG, *argv])} (threads={threads})")
    try:
        if threads == 1:
            return args.handler(args, None)
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return args.handler(args, executor)
    except (ArgumentError, FormatError, ValidationError, FileNotFoundError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_USAGE
    except Exception as e:
        logger.exception(f"{args.command} failed: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
