import argparse
import logging
from concurrent.futures import Executor
from typing import Optional

from app.commands.common import add_config_flags, run_config_from_args
from app.services.trainer import train

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("train", help="train a model, keeping the best checkpoint")
    add_config_flags(parser)
    parser.add_argument(
        "--resume", action="store_true", help="continue from last.qrck in the output dir"
    )
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, executor: Optional[Executor] = None) -> int:
    cfg = run_config_from_args(args)
    result = train(cfg, resume=args.resume, executor=executor)
    state = result.state
    print(
        f"epochs={state.epoch} steps={state.step} "
        f"best_val_auc={state.best_val_auc:.6f} head={cfg.train.head.value}"
    )
    print(f"best checkpoint: {result.best_checkpoint}")
    print(f"last checkpoint: {result.last_checkpoint}")
    return 0
