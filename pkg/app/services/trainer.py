import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from app.errors import ArgumentError, FormatError, StateError
from app.repos.checkpoint_repo import (
    Checkpoint,
    check_shapes,
    load_checkpoint,
    save_checkpoint,
)
from app.repos.manifest_repo import ManifestRepo
from app.schemas.checkpoint import CheckpointHeader
from app.schemas.config import RunConfig
from app.schemas.report import EvalReport
from app.schemas.volume import Split
from app.services.metrics import build_report
from app.services.model import QResNet
from app.services.optimizer import TrainState, adam_step, all_finite, bce_grad, bce_loss
from app.services.preprocessing import preprocess

logger = logging.getLogger(__name__)

BEST_NAME = "best.qrck"
LAST_NAME = "last.qrck"
LOG_NAME = "train.log"
LOG_HEADER = "# epoch\ttrain_loss\tval_auc\tval_acc"


@dataclass
class VolumeSet:
    volumes: np.ndarray  # (N, 1, S, S, S)
    labels: np.ndarray
    subject_ids: list[str]

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_auc: float
    val_acc: float

    def log_line(self) -> str:
        return f"{self.epoch}\t{self.train_loss:.17g}\t{self.val_auc:.17g}\t{self.val_acc:.17g}"


@dataclass
class TrainResult:
    state: TrainState
    best_checkpoint: Path
    last_checkpoint: Path
    history: list[EpochRecord] = field(default_factory=list)


def load_split_volumes(
    manifest_path: str | Path,
    split: Split,
    side: int,
    executor: Optional[Executor] = None,
) -> VolumeSet:
    """Read and preprocess (resize, min-max) every volume of `split`, in manifest order."""
    repo = ManifestRepo(manifest_path)
    entries = repo.load().split(Split(split))
    if not entries:
        raise ArgumentError(f"split '{Split(split).value}' of {manifest_path} is empty")

    def load(entry):
        return preprocess(repo.load_volume(entry), side)

    map_fn = executor.map if executor is not None else map
    volumes = list(map_fn(load, entries))
    return VolumeSet(
        volumes=np.stack([v.voxels for v in volumes])[:, None],
        labels=np.array([e.label for e in entries], dtype=np.float64),
        subject_ids=[e.subject_id for e in entries],
    )


def minibatches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Seeded shuffle cut into batches; a trailing batch of one joins the previous batch."""
    order = rng.permutation(n)
    batches = [order[i : i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        last = batches.pop()
        batches[-1] = np.concatenate([batches[-1], last])
    return batches


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, epoch])))


def build_model(cfg: RunConfig, executor: Optional[Executor] = None) -> QResNet:
    model = QResNet(cfg.net, cfg.qlayer, cfg.train.head, cfg.train.seed)
    if executor is not None:
        model.map_fn = executor.map
    return model


def _commit_precision(model: QResNet, state: TrainState) -> None:
    # round epoch-end state to checkpoint precision
    for _, tensor in model.named_parameters():
        tensor.data[...] = tensor.data.astype(np.float32)
    for buf in (*state.m, *state.v):
        buf[...] = buf.astype(np.float32)


def _to_checkpoint(model: QResNet, state: TrainState, cfg: RunConfig) -> Checkpoint:
    named = model.named_parameters()
    header = CheckpointHeader(
        run=cfg,
        tensor_names=[name for name, _ in named],
        epoch=state.epoch,
        step=state.step,
        best_val_auc=state.best_val_auc,
        best_val_loss=state.best_val_loss,
        bad_epochs=state.bad_epochs,
    )
    moments = [buf for pair in zip(state.m, state.v) for buf in pair]
    return Checkpoint(header=header, tensors=[t.data for _, t in named], moments=moments)


def restore_model(model: QResNet, checkpoint: Checkpoint) -> None:
    named = model.named_parameters()
    check_shapes(
        [name for name, _ in named], [t.shape for _, t in named], checkpoint.tensors
    )
    for (_, tensor), data in zip(named, checkpoint.tensors):
        tensor.data[...] = data.astype(np.float64)


def _restore_state(state: TrainState, checkpoint: Checkpoint) -> None:
    if len(checkpoint.moments) != 2 * len(state.params):
        raise FormatError(
            f"checkpoint holds {len(checkpoint.moments)} moment tensors, "
            f"expected {2 * len(state.params)}"
        )
    for i in range(len(state.params)):
        state.m[i][...] = checkpoint.moments[2 * i]
        state.v[i][...] = checkpoint.moments[2 * i + 1]
    state.step = checkpoint.header.step
    state.epoch = checkpoint.header.epoch
    state.best_val_auc = checkpoint.header.best_val_auc
    state.best_val_loss = checkpoint.header.best_val_loss
    state.bad_epochs = checkpoint.header.bad_epochs


def _check_resumable(saved: RunConfig, cfg: RunConfig) -> None:
    # run length and reporting settings may change between sessions
    keep = {"train": {"epochs", "patience"}, "data": {"out_dir", "threshold"}}
    if saved.model_dump(exclude=keep) != cfg.model_dump(exclude=keep):
        raise FormatError("last checkpoint was written for a different configuration")


def _evaluate_split(model: QResNet, data: VolumeSet, cfg: RunConfig) -> tuple[EvalReport, float]:
    """Report at the configured threshold plus the mean BCE over the split."""
    probs = model.predict(data.volumes, cfg.train.batch_size)
    report = build_report(probs, data.labels.astype(int), cfg.data.threshold)
    return report, float(bce_loss(probs, data.labels).mean())


def _improved(state: TrainState, val_auc: float, val_loss: float) -> bool:
    # equal AUC counts only when validation loss drops
    if state.best_val_auc is None or val_auc > state.best_val_auc:
        return True
    return val_auc == state.best_val_auc and (
        state.best_val_loss is None or val_loss < state.best_val_loss
    )


def train_epoch(
    model: QResNet,
    state: TrainState,
    data: VolumeSet,
    cfg: RunConfig,
) -> float:
    """One pass over `data`; returns the mean per-sample BCE."""
    gradients = [t for _, t in model.trainable_parameters()]
    total = 0.0
    for batch in minibatches(len(data), cfg.train.batch_size, epoch_rng(cfg.train.seed, state.epoch)):
        x, y = data.volumes[batch], data.labels[batch]
        model.zero_grad()
        probs = model.forward(x, "train")
        losses = bce_loss(probs, y)
        if not all_finite([losses]):
            raise StateError(f"non-finite loss at step {state.step + 1}")
        total += float(losses.sum())
        model.backward(bce_grad(probs, y) / len(batch))
        adam_step(state, [t.grad for t in gradients], cfg.train)
    return total / len(data)


def train(
    cfg: RunConfig,
    resume: bool = False,
    executor: Optional[Executor] = None,
) -> TrainResult:
    """
    Minibatch BCE + Adam, one validation pass per epoch. `best.qrck` holds the
    epoch with the highest validation AUC, `last.qrck` the latest epoch.
    """
    manifest = ManifestRepo(cfg.data.manifest).load()
    for split in Split:
        if not manifest.split(split):
            raise ArgumentError(f"split '{split.value}' of {cfg.data.manifest} is empty")
    side = cfg.net.input_side
    train_set = load_split_volumes(cfg.data.manifest, Split.train, side, executor)
    val_set = load_split_volumes(cfg.data.manifest, Split.val, side, executor)
    if len(train_set) < 2:
        raise ArgumentError("train split needs at least 2 volumes for batch statistics")
    if len(set(val_set.labels.tolist())) < 2:
        raise ArgumentError("val split must hold both classes for AUC model selection")

    model = build_model(cfg, executor)
    state = TrainState.for_parameters([t for _, t in model.trainable_parameters()])

    out_dir = Path(cfg.data.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    best_path, last_path, log_path = out_dir / BEST_NAME, out_dir / LAST_NAME, out_dir / LOG_NAME

    if resume:
        if not last_path.exists():
            raise ArgumentError(f"nothing to resume: {last_path} does not exist")
        checkpoint = load_checkpoint(last_path)
        _check_resumable(checkpoint.header.run, cfg)
        restore_model(model, checkpoint)
        _restore_state(state, checkpoint)
        if best_path.exists():
            state.best_checkpoint = best_path
        logger.info(f"Resuming from {last_path} after epoch {state.epoch}")
    else:
        log_path.write_text(LOG_HEADER + "\n", encoding="utf-8")

    result = TrainResult(state=state, best_checkpoint=best_path, last_checkpoint=last_path)
    while state.epoch < cfg.train.epochs:
        if cfg.train.patience and state.bad_epochs >= cfg.train.patience:
            break
        train_loss = train_epoch(model, state, train_set, cfg)
        state.epoch += 1
        _commit_precision(model, state)

        report, val_loss = _evaluate_split(model, val_set, cfg)
        record = EpochRecord(state.epoch, train_loss, report.auc, report.acc)
        result.history.append(record)

        if _improved(state, report.auc, val_loss):
            state.best_val_auc = report.auc
            state.best_val_loss = val_loss
            state.bad_epochs = 0
            state.best_checkpoint = best_path
            save_checkpoint(best_path, _to_checkpoint(model, state, cfg))
        else:
            state.bad_epochs += 1
        save_checkpoint(last_path, _to_checkpoint(model, state, cfg))

        with open(log_path, "a", encoding="utf-8", newline="\n") as f:
            f.write(record.log_line() + "\n")
        logger.info(
            f"epoch {record.epoch}: train_loss={train_loss:.6f} "
            f"val_auc={report.auc:.4f} val_loss={val_loss:.6f} val_acc={report.acc:.4f}"
        )

    if cfg.train.patience and state.bad_epochs >= cfg.train.patience:
        logger.info(f"Early stop after {state.epoch} epochs ({state.bad_epochs} without improvement)")
    return result


def load_trained(
    checkpoint_path: str | Path, executor: Optional[Executor] = None
) -> tuple[QResNet, RunConfig]:
    checkpoint = load_checkpoint(checkpoint_path)
    cfg = checkpoint.header.run
    model = build_model(cfg, executor)
    restore_model(model, checkpoint)
    return model, cfg


def score_split(
    checkpoint_path: str | Path,
    split: Split,
    manifest_path: Optional[str | Path] = None,
    executor: Optional[Executor] = None,
) -> tuple[np.ndarray, np.ndarray, RunConfig]:
    """Eval-mode probabilities and labels for `split`, plus the stored run config."""
    model, cfg = load_trained(checkpoint_path, executor)
    data = load_split_volumes(
        manifest_path or cfg.data.manifest, split, cfg.net.input_side, executor
    )
    return model.predict(data.volumes, cfg.train.batch_size), data.labels.astype(int), cfg


def evaluate(
    checkpoint_path: str | Path,
    split: Split,
    manifest_path: Optional[str | Path] = None,
    threshold: Optional[float] = None,
    executor: Optional[Executor] = None,
) -> EvalReport:
    probs, labels, cfg = score_split(checkpoint_path, split, manifest_path, executor)
    report = build_report(probs, labels, cfg.data.threshold if threshold is None else threshold)
    logger.debug(f"Evaluated {checkpoint_path} on {Split(split).value}: auc={report.auc}")
    return report
