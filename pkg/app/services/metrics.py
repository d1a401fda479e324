"""
Confusion statistics and ROC/AUC. Predicted positive iff score >= threshold.
"""

import logging
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from app.errors import ArgumentError
from app.schemas.report import EvalReport

logger = logging.getLogger(__name__)

RocPoint = tuple[float, float, float]  # fpr, tpr, threshold
COLUMNS = ("AUC", "ACC", "SEN", "SPE")


def _check_inputs(scores: Sequence[float], labels: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.size == 0:
        raise ArgumentError("scores must not be empty")
    if s.size != y.size:
        raise ArgumentError(f"got {s.size} scores but {y.size} labels")
    if not np.all((y == 0) | (y == 1)):
        raise ArgumentError("labels must be 0 or 1")
    return s, y.astype(np.int64)


def confusion(
    scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5
) -> tuple[int, int, int, int]:
    """Returns (tp, fp, tn, fn)."""
    s, y = _check_inputs(scores, labels)
    if np.any(~np.isfinite(s)) or np.any((s < 0.0) | (s > 1.0)):
        raise ArgumentError("scores must lie in [0, 1]")
    predicted = s >= threshold
    tp = int(np.sum(predicted & (y == 1)))
    fp = int(np.sum(predicted & (y == 0)))
    tn = int(np.sum(~predicted & (y == 0)))
    fn = int(np.sum(~predicted & (y == 1)))
    return tp, fp, tn, fn


def _cumulative_counts(s: np.ndarray, y: np.ndarray):
    thresholds = np.unique(s)[::-1]
    # positives/negatives scoring >= each threshold
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    ends = np.searchsorted(-s_sorted, -thresholds, side="right")
    tps = np.concatenate([[0], np.cumsum(y_sorted)[ends - 1]])
    fps = np.concatenate([[0], np.cumsum(1 - y_sorted)[ends - 1]])
    return thresholds, tps, fps


def roc_curve(scores: Sequence[float], labels: Sequence[int]) -> list[RocPoint]:
    """
    One point per distinct score plus a leading +inf sentinel at (0, 0).
    The lowest distinct score lands on (1, 1).
    """
    s, y = _check_inputs(scores, labels)
    positives, negatives = int(y.sum()), int(y.size - y.sum())
    if positives == 0:
        raise ArgumentError("ROC needs at least one positive label (class 1 missing)")
    if negatives == 0:
        raise ArgumentError("ROC needs at least one negative label (class 0 missing)")

    thresholds, tps, fps = _cumulative_counts(s, y)
    all_thresholds = np.concatenate([[math.inf], thresholds])
    return [
        (float(fp / negatives), float(tp / positives), float(t))
        for fp, tp, t in zip(fps, tps, all_thresholds)
    ]


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> tuple[float, list[tuple[float, float]]]:
    """
    Trapezoidal area under the ROC curve. Tied scores share one threshold, so
    the area equals P(pos > neg) + P(pos == neg) / 2.
    """
    points = roc_curve(scores, labels)
    s, y = _check_inputs(scores, labels)
    positives, negatives = int(y.sum()), int(y.size - y.sum())
    _, tps, fps = _cumulative_counts(s, y)
    # integer trapezoids, doubled
    area2 = int(np.sum(np.diff(fps) * (tps[1:] + tps[:-1])))
    auc = area2 / (2 * positives * negatives)
    return auc, [(fpr, tpr) for fpr, tpr, _ in points]


def build_report(
    scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5
) -> EvalReport:
    tp, fp, tn, fn = confusion(scores, labels, threshold)
    warnings: list[str] = []
    if tp + fn == 0:
        warnings.append("no positive samples: SEN reported as 0")
    if tn + fp == 0:
        warnings.append("no negative samples: SPE reported as 0")

    auc: Optional[float] = None
    roc_points: list[tuple[float, float]] = []
    if tp + fn > 0 and tn + fp > 0:
        auc, roc_points = roc_auc(scores, labels)
    else:
        warnings.append("single-class split: AUC undefined")
    for w in warnings:
        logger.warning(w)

    total = tp + fp + tn + fn
    return EvalReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        acc=(tp + tn) / total,
        sen=tp / (tp + fn) if tp + fn else 0.0,
        spe=tn / (tn + fp) if tn + fp else 0.0,
        auc=auc,
        threshold=threshold,
        roc_points=roc_points,
        warnings=warnings,
    )


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def _row(report: EvalReport) -> list[str]:
    return [_fmt(report.auc), _fmt(report.acc), _fmt(report.sen), _fmt(report.spe)]


def format_report_line(report: EvalReport, prefix: Optional[str] = None) -> str:
    line = " ".join(f"{name}={value}" for name, value in zip(COLUMNS, _row(report)))
    return f"{prefix} {line}" if prefix else line


def format_report_table(rows: Iterable[tuple[str, EvalReport]]) -> str:
    body = [[name, *_row(report)] for name, report in rows]
    header = ["Model", *COLUMNS]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = [
        "  ".join(
            cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i])
            for i, cell in enumerate(r)
        )
        for r in [header, *body]
    ]
    return "\n".join(lines)


def write_roc(points: Sequence[RocPoint], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for fpr, tpr, threshold in points:
            f.write(f"{fpr:.17g}\t{tpr:.17g}\t{threshold:.17g}\n")
