"""Binary classification metrics with High as the positive class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import DEFAULT_THRESHOLD, TrainedModel, labels_to_targets, score_batch
from .core import Dataset
from .errors import InvalidConfig
from .geometry import feature_matrix


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


@dataclass(frozen=True)
class ClassificationReport:
    """Metric quartet; a metric with a zero denominator is ``None``."""

    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    confusion: ConfusionMatrix
    n: int
    threshold: float | None = None

    def percentages(self) -> dict[str, str]:
        """Metrics formatted as 2-decimal percentages ('undefined' when None)."""
        return {name: format_percent(getattr(self, name)) for name in ("accuracy", "precision", "recall", "f1")}

    def summary_line(self) -> str:
        p = self.percentages()
        return (
            f"accuracy {p['accuracy']}  precision {p['precision']}  "
            f"recall {p['recall']}  f1 {p['f1']}  (n={self.n})"
        )

    def to_dict(self) -> dict:
        c = self.confusion
        return {
            "format_version": 1,
            "n": self.n,
            "threshold": self.threshold,
            "confusion": {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn},
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "percent": self.percentages(),
        }


def format_percent(value: float | None) -> str:
    return "undefined" if value is None else f"{100.0 * value:.2f}"


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def confusion_from_predictions(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=bool)
    y_pred = np.asarray(y_pred, dtype=bool)
    return ConfusionMatrix(
        tp=int(np.sum(y_true & y_pred)),
        fp=int(np.sum(~y_true & y_pred)),
        fn=int(np.sum(y_true & ~y_pred)),
        tn=int(np.sum(~y_true & ~y_pred)),
    )


def report_from_confusion(cm: ConfusionMatrix, threshold: float | None = None) -> ClassificationReport:
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    # 2pr/(p+r) written on counts; p = r = 0 leaves it 0/0
    if precision is None or recall is None or cm.tp == 0:
        f1 = None
    else:
        f1 = _ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn)
    return ClassificationReport(
        accuracy=_ratio(cm.tp + cm.tn, cm.n),
        precision=precision,
        recall=recall,
        f1=f1,
        confusion=cm,
        n=cm.n,
        threshold=threshold,
    )


def evaluate(model: TrainedModel, test_set: Dataset, threshold: float = DEFAULT_THRESHOLD) -> ClassificationReport:
    """Score every sample of ``test_set`` and compare against its label."""
    if not 0.0 <= threshold <= 1.0:
        raise InvalidConfig(f"threshold must be in [0, 1], got {threshold}")
    y = labels_to_targets(test_set)
    scores = score_batch(model, feature_matrix(test_set.samples))
    return report_from_confusion(confusion_from_predictions(y == 1, scores >= threshold), threshold)
