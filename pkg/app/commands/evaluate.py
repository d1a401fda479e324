import argparse
import logging
from concurrent.futures import Executor
from pathlib import Path
from typing import Optional

from app.commands.common import load_run_config, unit_float
from app.errors import ArgumentError
from app.schemas.volume import Split
from app.services.metrics import format_report_line, format_report_table
from app.services.trainer import BEST_NAME, evaluate

logger = logging.getLogger(__name__)


def add_checkpoint_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--checkpoint", type=Path, help="QRCK checkpoint to load")
    parser.add_argument(
        "--config", type=Path, help="run config; its out_dir/best.qrck is used without --checkpoint"
    )
    parser.add_argument("--split", choices=[s.value for s in Split], default=Split.test.value)
    parser.add_argument("--manifest", type=Path, help="manifest to read the split from")


def resolve_checkpoint(args: argparse.Namespace) -> Path:
    if args.checkpoint is not None:
        path = args.checkpoint
    else:
        path = Path(load_run_config(args.config).data.out_dir) / BEST_NAME
    if not path.exists():
        raise ArgumentError(f"no checkpoint at {path}; run 'train' first")
    return path


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="report AUC/ACC/SEN/SPE on a split")
    add_checkpoint_flags(parser)
    parser.add_argument("--threshold", type=unit_float, help="classification threshold")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, executor: Optional[Executor] = None) -> int:
    checkpoint = resolve_checkpoint(args)
    report = evaluate(
        checkpoint,
        Split(args.split),
        manifest_path=args.manifest,
        threshold=args.threshold,
        executor=executor,
    )
    print(format_report_table([(checkpoint.stem, report)]))
    print(format_report_line(report))
    return 0
