"""Classification metrics: accuracy, macro F1, confusion counts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..validation import SpecError


@dataclass(frozen=True)
class EvalReport:
    """Summary of one evaluation: accuracy is a percentage, confusion rows
    follow the truth axis in `classes` order."""

    accuracy: float
    macro_f1: float
    confusion: np.ndarray
    classes: tuple
    per_fold: tuple = field(default_factory=tuple)
    notes: tuple = field(default_factory=tuple)


def confusion_matrix(preds, truth, classes):
    index = {c: k for k, c in enumerate(classes)}
    mat = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for p, t in zip(preds, truth):
        mat[index[t], index[p]] += 1
    return mat


def macro_f1_from_confusion(mat):
    """Mean per-class F1; a class with no support and no predictions scores 0."""
    scores = []
    for k in range(mat.shape[0]):
        tp = mat[k, k]
        fp = mat[:, k].sum() - tp
        fn = mat[k, :].sum() - tp
        denom = 2 * tp + fp + fn
        scores.append(2.0 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def evaluate(preds, truth, classes=None, per_fold=(), notes=()):
    """EvalReport for one prediction set."""
    preds = np.asarray(preds)
    truth = np.asarray(truth)
    if preds.size == 0 or truth.size == 0:
        raise SpecError("cannot evaluate empty predictions")
    if preds.shape != truth.shape:
        raise SpecError(
            f"prediction/truth length mismatch: {preds.shape} vs {truth.shape}"
        )
    if classes is None:
        classes = tuple(np.unique(np.concatenate([truth, preds])))
    else:
        classes = tuple(classes)
        known = set(classes)
        for v in np.unique(np.concatenate([truth, preds])):
            if v not in known:
                raise SpecError(f"label {v!r} not in declared classes")
    mat = confusion_matrix(preds, truth, classes)
    return EvalReport(
        accuracy=100.0 * np.trace(mat) / mat.sum(),
        macro_f1=macro_f1_from_confusion(mat),
        confusion=mat,
        classes=classes,
        per_fold=tuple(per_fold),
        notes=tuple(notes),
    )
