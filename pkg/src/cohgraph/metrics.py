"""Classification metrics over the three coherence labels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .labels import CoherenceLabel

_LABELS = (CoherenceLabel.LOW, CoherenceLabel.MEDIUM, CoherenceLabel.HIGH)


def _check_lengths(preds, golds) -> None:
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} preds vs {len(golds)} golds")
    if not golds:
        raise ValueError("empty prediction/gold lists")


def confusion_matrix(preds, golds) -> np.ndarray:
    """3x3 counts, rows = gold label, columns = predicted label."""
    _check_lengths(preds, golds)
    counts = np.zeros((3, 3), dtype=np.int64)
    for pred, gold in zip(preds, golds):
        counts[int(gold), int(pred)] += 1
    return counts


def accuracy(preds, golds) -> float:
    _check_lengths(preds, golds)
    return sum(int(p) == int(g) for p, g in zip(preds, golds)) / len(golds)


def macro_f1(preds, golds) -> float:
    """Unweighted mean of per-class F1.

    A class absent from both predictions and golds is degenerate and
    contributes F1 = 0 (the strict convention); per_label_report surfaces
    which classes were degenerate.
    """
    confusion = confusion_matrix(preds, golds)
    return _macro_f1_from_confusion(confusion)[0]


def _macro_f1_from_confusion(confusion: np.ndarray):
    f1s = []
    degenerate = []
    for c in range(3):
        tp = confusion[c, c]
        fp = confusion[:, c].sum() - tp
        fn = confusion[c, :].sum() - tp
        if tp + fp + fn == 0:
            degenerate.append(_LABELS[c])
            f1s.append(0.0)
            continue
        f1s.append(2.0 * tp / (2.0 * tp + fp + fn) if tp else 0.0)
    return float(np.mean(f1s)), tuple(degenerate)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    macro_f1: float
    per_label_accuracy: dict[CoherenceLabel, float]
    range: float
    confusion: tuple[tuple[int, ...], ...]
    degenerate_classes: tuple[CoherenceLabel, ...]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "per_label_accuracy": {label.as_text: value for label, value
                                   in self.per_label_accuracy.items()},
            "range": self.range,
            "confusion": [list(row) for row in self.confusion],
            "degenerate_classes": [c.as_text for c in self.degenerate_classes],
        }


def per_label_report(preds, golds) -> EvalReport:
    """Full report: accuracy, macro-F1, per-class recall, and their range.

    Per-label accuracy is the recall of each class; range is the spread
    between the best- and worst-classified labels. Classes with no gold
    examples are excluded from the per-label table and flagged instead of
    failing.
    """
    confusion = confusion_matrix(preds, golds)
    f1, degenerate = _macro_f1_from_confusion(confusion)
    per_label: dict[CoherenceLabel, float] = {}
    for c in range(3):
        support = confusion[c, :].sum()
        if support:
            per_label[_LABELS[c]] = float(confusion[c, c] / support)
    values = list(per_label.values())
    return EvalReport(
        accuracy=float(np.trace(confusion) / confusion.sum()),
        macro_f1=f1,
        per_label_accuracy=per_label,
        range=float(max(values) - min(values)) if values else 0.0,
        confusion=tuple(tuple(int(x) for x in row) for row in confusion),
        degenerate_classes=degenerate,
    )
