"""
Classification metrics with abusive (label 1) as the positive class.
"""

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import confusion_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    positive_f1: float
    negative_f1: float
    macro_f1: float

    def as_tuple(self):
        return self.accuracy, self.positive_f1, self.macro_f1


def confusion(predictions, labels) -> ConfusionCounts:
    predictions = np.asarray(predictions, dtype=np.int64).ravel()
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if predictions.shape != labels.shape:
        raise ValueError(f"{predictions.size} predictions for {labels.size} labels")
    if labels.size == 0:
        raise ValueError("confusion counts need at least one example")
    tn, fp, fn, tp = confusion_matrix(labels, predictions, labels=[0, 1]).ravel()
    return ConfusionCounts(tp=int(tp), fp=int(fp), tn=int(tn), fn=int(fn))


def _f1(tp, fp, fn):
    denominator = 2 * tp + fp + fn
    return 2.0 * tp / denominator if denominator else 0.0


def metrics(counts: ConfusionCounts) -> Metrics:
    """Accuracy, positive-F1, negative-F1 and macro-F1; an undefined F1 (0/0) counts as 0"""
    if counts.total < 1:
        raise ValueError("metrics need at least one counted example")
    positive = _f1(counts.tp, counts.fp, counts.fn)
    negative = _f1(counts.tn, counts.fn, counts.fp)
    return Metrics(
        accuracy=(counts.tp + counts.tn) / counts.total,
        positive_f1=positive,
        negative_f1=negative,
        macro_f1=(positive + negative) / 2.0,
    )
