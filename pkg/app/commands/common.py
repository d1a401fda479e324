import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Optional

from app.errors import ArgumentError
from app.schemas.config import HeadKind, RunConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)


def unit_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid float value: {text!r}")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid int value: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def seed_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed: {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in u64, got {value}")
    return value


def int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}")


# flag, config path, argparse type
OVERRIDES: list[tuple[str, str, Callable[[str], Any]]] = [
    ("--manifest", "data.manifest", str),
    ("--out-dir", "data.out_dir", str),
    ("--threshold", "data.threshold", unit_float),
    ("--input-side", "net.input_side", positive_int),
    ("--channels", "net.channels", int_list),
    ("--blocks-per-stage", "net.blocks_per_stage", positive_int),
    ("--n-out", "net.n_out", positive_int),
    ("--n-qubits", "qlayer.n_qubits", positive_int),
    ("--fm-reps", "qlayer.fm_reps", positive_int),
    ("--ansatz-reps", "qlayer.ansatz_reps", positive_int),
    ("--epochs", "train.epochs", positive_int),
    ("--batch-size", "train.batch_size", positive_int),
    ("--lr", "train.learning_rate", float),
    ("--beta1", "train.beta1", float),
    ("--beta2", "train.beta2", float),
    ("--eps-adam", "train.eps_adam", float),
    ("--seed", "train.seed", seed_int),
    ("--patience", "train.patience", int),
]


def _dest(flag: str) -> str:
    return "override_" + flag.lstrip("-").replace("-", "_")


def add_config_flags(parser: argparse.ArgumentParser, with_head: bool = True) -> None:
    parser.add_argument("--config", type=Path, help="TOML run configuration")
    for flag, path, kind in OVERRIDES:
        parser.add_argument(flag, dest=_dest(flag), type=kind, help=f"override {path}")
    if with_head:
        parser.add_argument(
            "--head",
            dest=_dest("--head"),
            choices=[h.value for h in HeadKind],
            help="override train.head",
        )


def collect_overrides(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    flags = [(flag, path) for flag, path, _ in OVERRIDES] + [("--head", "train.head")]
    for flag, path in flags:
        value = getattr(args, _dest(flag), None)
        if value is None:
            continue
        section, key = path.split(".")
        overrides.setdefault(section, {})[key] = value
    return overrides


def read_toml(path: Path) -> dict:
    with open(path, "rb") as f:
        try:
            return tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ArgumentError(f"{path}: {e}") from e


def merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out


def load_run_config(path: Optional[Path], overrides: Optional[dict] = None) -> RunConfig:
    """File values first, flag overrides on top; unknown keys are rejected."""
    raw = read_toml(path) if path is not None else {}
    return RunConfig.model_validate(merge(raw, overrides or {}))


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = load_run_config(args.config, collect_overrides(args))
    logger.info(f"Effective config: {cfg.model_dump_json()}")
    return cfg
