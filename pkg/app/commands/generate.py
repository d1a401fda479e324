import argparse
import logging
from concurrent.futures import Executor
from pathlib import Path
from typing import Optional

from app.commands.common import positive_int, seed_int, unit_float
from app.schemas.volume import Split
from app.services.synthetic import MANIFEST_NAME, generate_synthetic

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("generate", help="write a synthetic lesion dataset")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--n-per-class", type=positive_int, default=100)
    parser.add_argument("--side", type=positive_int, default=16)
    parser.add_argument("--seed", type=seed_int, default=42)
    parser.add_argument("--difficulty", type=unit_float, default=0.2)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, executor: Optional[Executor] = None) -> int:
    manifest = generate_synthetic(
        args.out,
        n_per_class=args.n_per_class,
        side=args.side,
        seed=args.seed,
        difficulty=args.difficulty,
    )
    counts = " ".join(f"{s.value}={len(manifest.split(s))}" for s in Split)
    print(f"wrote {len(manifest.entries)} volumes to {args.out} ({counts})")
    print(f"manifest: {args.out / MANIFEST_NAME}")
    return 0
