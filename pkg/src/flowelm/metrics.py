"""Binary-classification evaluation: confusion counts, P/R/F1, accuracy, AUC.

The positive class is the attack class (label 1). Ratios with a zero
denominator fall back to 0.0 and set the `degenerate` flag on the report,
since tiny folds can legitimately produce empty prediction classes. AUC is
the rank statistic (probability a random positive outscores a random
negative, ties counting one half), which equals the trapezoidal area under
the ROC curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import elm
from .errors import DataError, ShapeError
from .preprocess import FlowDataset


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise DataError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _check_binary(vec, name: str) -> np.ndarray:
    arr = np.asarray(vec)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be a vector")
    arr = arr.astype(np.int64)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise DataError(f"{name} must contain only 0 and 1")
    return arr


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = _check_binary(y_true, "y_true")
    p = _check_binary(y_pred, "y_pred")
    if t.shape[0] != p.shape[0]:
        raise ShapeError(f"length mismatch: {t.shape[0]} labels vs {p.shape[0]} predictions")
    if t.shape[0] == 0:
        raise ShapeError("confusion requires at least one sample")
    return ConfusionMatrix(
        tp=int(np.sum((t == 1) & (p == 1))),
        fp=int(np.sum((t == 0) & (p == 1))),
        tn=int(np.sum((t == 0) & (p == 0))),
        fn=int(np.sum((t == 1) & (p == 0))),
    )


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def prf1(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """Positive-class precision, recall, F1; zero denominators yield 0.0."""
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise DataError("accuracy of an empty confusion matrix")
    return (cm.tp + cm.tn) / cm.total


def auc_roc(y_true, scores) -> float:
    """Rank-based AUC; requires both classes present."""
    t = _check_binary(y_true, "y_true")
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.shape[0] != t.shape[0]:
        raise ShapeError(f"scores must be a vector of length {t.shape[0]}")
    n_pos = int(np.sum(t == 1))
    n_neg = t.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs at least one sample of each class")

    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.shape[0])
    sorted_scores = s[order]
    i = 0
    while i < s.shape[0]:
        j = i
        while j + 1 < s.shape[0] and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank
        i = j + 1
    rank_sum = float(ranks[t == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class EvalReport:
    """Full evaluation over one labeled set at one decision threshold."""

    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc_roc: float
    threshold: float
    n_samples: int
    neg_precision: float
    neg_recall: float
    degenerate: bool


def evaluate(model: elm.ElmModel, test: FlowDataset, threshold: float = 0.5) -> EvalReport:
    """Score once, threshold, and fill every report field.

    The test features must already be in model space (selected and scaled).
    """
    if test.n_samples == 0:
        raise DataError("cannot evaluate on an empty dataset")
    scores = elm.score(model, test.features)
    pred = (scores >= threshold).astype(np.int64)
    cm = confusion(test.labels, pred)
    precision, recall, f1 = prf1(cm)
    neg_precision = _ratio(cm.tn, cm.tn + cm.fn)
    neg_recall = _ratio(cm.tn, cm.tn + cm.fp)
    degenerate = (
        cm.tp + cm.fp == 0
        or cm.tp + cm.fn == 0
        or cm.tn + cm.fn == 0
        or cm.tn + cm.fp == 0
        or precision + recall == 0
    )
    return EvalReport(
        confusion=cm,
        accuracy=accuracy(cm),
        precision=precision,
        recall=recall,
        f1=f1,
        auc_roc=auc_roc(test.labels, scores),
        threshold=threshold,
        n_samples=test.n_samples,
        neg_precision=neg_precision,
        neg_recall=neg_recall,
        degenerate=degenerate,
    )
