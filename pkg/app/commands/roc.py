import argparse
import logging
from concurrent.futures import Executor
from pathlib import Path
from typing import Optional

from app.commands.evaluate import add_checkpoint_flags, resolve_checkpoint
from app.schemas.volume import Split
from app.services.metrics import roc_auc, roc_curve, write_roc
from app.services.trainer import score_split

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("roc", help="write ROC points (fpr, tpr, threshold)")
    add_checkpoint_flags(parser)
    parser.add_argument("--out", type=Path, required=True, help="ROC text file to write")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, executor: Optional[Executor] = None) -> int:
    checkpoint = resolve_checkpoint(args)
    scores, labels, _ = score_split(checkpoint, Split(args.split), args.manifest, executor)
    points = roc_curve(scores, labels)
    write_roc(points, args.out)
    auc, _ = roc_auc(scores, labels)
    print(f"AUC={auc:.3f} points={len(points)} -> {args.out}")
    return 0
