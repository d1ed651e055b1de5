"""Evaluation metrics over integer class predictions.

Everything is computed from a 10x10 confusion matrix in exact integer
arithmetic, converted to float only at the final division. Conventions:

* precision/recall/F1 with a 0/0 numerator-denominator are defined as 0
* macro-F1 averages over all K classes, absent classes contributing 0
* weighted-F1 weights per-class F1 by true-label support
* Cohen's kappa is the unweighted form; a constant predictor scores exactly
  0 because observed and expected agreement coincide term by term
* MSE is taken on the task's natural label scale (ratings 1..10,
  disagreements 0..9), not on probabilities
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateDistributionError,
    EmptyInputError,
    LabelOutOfRangeError,
    LengthMismatchError,
)
from .tasks import NUM_CLASSES, Task

AVERAGINGS = ("micro", "macro", "weighted")


@dataclass
class ConfusionMatrix:
    """Counts with cell (i, j) = how often true class i was predicted as j.

    ``offset`` records the natural label of class index 0 (1 for ratings,
    0 for disagreements) so reports can speak in label space.
    """

    counts: np.ndarray
    offset: int = 0

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValueError(f"counts must be square, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("counts must be non-negative")

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(
    y_true: Sequence[int],
    y_pred: Sequence[int],
    k: int = NUM_CLASSES,
    offset: int = 0,
) -> ConfusionMatrix:
    """Tally an aligned pair of label lists into a KxK matrix."""
    if len(y_true) != len(y_pred):
        raise LengthMismatchError(
            f"y_true has {len(y_true)} items, y_pred has {len(y_pred)}"
        )
    if len(y_true) == 0:
        raise EmptyInputError("cannot build a confusion matrix from empty lists")
    counts = np.zeros((k, k), dtype=np.int64)
    lo, hi = offset, offset + k - 1
    for t, p in zip(y_true, y_pred):
        if not (lo <= t <= hi) or not (lo <= p <= hi):
            raise LabelOutOfRangeError(
                f"labels must lie in [{lo}, {hi}]; got true={t}, pred={p}"
            )
        counts[t - offset, p - offset] += 1
    return ConfusionMatrix(counts=counts, offset=offset)


def _per_class_f1(cm: ConfusionMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-class F1 and support arrays, with the 0/0 -> 0 convention."""
    counts = cm.counts
    tp = np.diag(counts).astype(np.float64)
    support = counts.sum(axis=1).astype(np.float64)
    predicted = counts.sum(axis=0).astype(np.float64)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    pr_sum = precision + recall
    f1 = np.divide(
        2.0 * precision * recall, pr_sum, out=np.zeros_like(tp), where=pr_sum > 0
    )
    return f1, support


def f1_score(cm: ConfusionMatrix, averaging: str = "weighted") -> float:
    """F1 under one of the three averaging schemes ('micro' equals accuracy)."""
    if averaging not in AVERAGINGS:
        raise ValueError(f"averaging must be one of {AVERAGINGS}, got {averaging!r}")
    if averaging == "micro":
        # Single-label: global TP is the diagonal, FP and FN both n - TP,
        # so micro precision, recall, and F1 all reduce to accuracy.
        return float(np.diag(cm.counts).sum() / cm.n)
    f1, support = _per_class_f1(cm)
    if averaging == "macro":
        return float(f1.mean())
    total = support.sum()
    return float((f1 * support).sum() / total) if total > 0 else 0.0


def cohens_kappa(cm: ConfusionMatrix) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e).

    Numerators and denominators are exact integers scaled by n^2, so a
    constant predictor yields exactly 0.0 and degenerate expected agreement
    is detected exactly rather than through float underflow.
    """
    counts = cm.counts
    n = cm.n
    if n == 0:
        raise EmptyInputError("kappa is undefined for an empty matrix")
    po_scaled = int(np.diag(counts).sum()) * n  # p_o * n^2
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    pe_scaled = int(np.dot(rows, cols))  # p_e * n^2
    n_sq = n * n
    if pe_scaled == n_sq:
        if po_scaled == n_sq:
            return 0.0  # every observation in one agreed-upon cell
        raise DegenerateDistributionError(
            "expected agreement is 1 but observed agreement is below 1"
        )
    return float((po_scaled - pe_scaled) / (n_sq - pe_scaled))


def mse(y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    """Mean squared difference on the natural label scale."""
    if len(y_true) != len(y_pred):
        raise LengthMismatchError(
            f"y_true has {len(y_true)} items, y_pred has {len(y_pred)}"
        )
    if len(y_true) == 0:
        raise EmptyInputError("MSE is undefined for empty lists")
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    return float(int(np.square(t - p).sum()) / len(t))


@dataclass
class MetricReport:
    """All evaluation numbers for one task, JSON round-trippable."""

    task: Task
    n: int
    f1_micro: float
    f1_macro: float
    f1_weighted: float
    cohens_kappa: float
    mse: float

    def to_dict(self, precision: int | None = None) -> dict:
        def fmt(value: float) -> float:
            return round(value, precision) if precision is not None else value

        return {
            "task": self.task.value,
            "n": self.n,
            "f1_micro": fmt(self.f1_micro),
            "f1_macro": fmt(self.f1_macro),
            "f1_weighted": fmt(self.f1_weighted),
            "cohens_kappa": fmt(self.cohens_kappa),
            "mse": fmt(self.mse),
        }

    def to_json(self, precision: int | None = None, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(precision=precision), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        return cls(
            task=Task.from_string(data["task"]),
            n=int(data["n"]),
            f1_micro=float(data["f1_micro"]),
            f1_macro=float(data["f1_macro"]),
            f1_weighted=float(data["f1_weighted"]),
            cohens_kappa=float(data["cohens_kappa"]),
            mse=float(data["mse"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        return cls.from_dict(json.loads(text))


def evaluate(
    y_true: Sequence[int], y_pred: Sequence[int], task: Task
) -> MetricReport:
    """Full report over natural-scale labels for the given task."""
    cm = confusion_matrix(
        y_true, y_pred, k=NUM_CLASSES, offset=task.label_offset
    )
    return MetricReport(
        task=task,
        n=cm.n,
        f1_micro=f1_score(cm, "micro"),
        f1_macro=f1_score(cm, "macro"),
        f1_weighted=f1_score(cm, "weighted"),
        cohens_kappa=cohens_kappa(cm),
        mse=mse(y_true, y_pred),
    )
