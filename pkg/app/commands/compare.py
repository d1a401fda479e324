import argparse
import logging
from concurrent.futures import Executor
from pathlib import Path
from typing import Optional

from app.commands.common import add_config_flags, run_config_from_args
from app.schemas.config import HeadKind
from app.schemas.volume import Split
from app.services.metrics import format_report_line, format_report_table
from app.services.trainer import evaluate, train

logger = logging.getLogger(__name__)

# row order of the comparison table
HEAD_ROWS = [(HeadKind.classical, "ResNet3D"), (HeadKind.quantum, "QResNet")]


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "compare", help="train classical and quantum heads identically and compare them"
    )
    add_config_flags(parser, with_head=False)
    parser.add_argument("--split", choices=[s.value for s in Split], default=Split.test.value)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, executor: Optional[Executor] = None) -> int:
    base = run_config_from_args(args)
    rows = []
    for head, label in HEAD_ROWS:
        cfg = base.model_copy(
            update={
                "train": base.train.model_copy(update={"head": head}),
                "data": base.data.model_copy(
                    update={"out_dir": Path(base.data.out_dir) / head.value}
                ),
            }
        )
        logger.info(f"Training {label} ({head.value} head) into {cfg.data.out_dir}")
        result = train(cfg, executor=executor)
        report = evaluate(result.best_checkpoint, Split(args.split), executor=executor)
        rows.append((head, label, report))

    print(format_report_table([(label, report) for _, label, report in rows]))
    for head, _, report in rows:
        print(format_report_line(report, prefix=head.value))
    return 0
