# distress_transfer/models/metrics.py
"""Accuracy, sensitivity and specificity with Distress as the positive class."""
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix

from ..features import FeatureMatrix
from .base import TrainedClassifier


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    sensitivity: float
    specificity: float
    tp: int
    fp: int
    tn: int
    fn: int
    undefined: Tuple[str, ...] = ()  # ratios whose denominator was 0 (reported as 0)

    @property
    def confusion(self) -> Tuple[int, int, int, int]:
        return self.tp, self.fp, self.tn, self.fn

    @property
    def selection_score(self) -> float:
        return self.sensitivity + self.specificity

    def to_dict(self) -> Dict:
        return {
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "undefined": list(self.undefined),
        }


def _ratio(numerator: int, denominator: int) -> Tuple[float, bool]:
    if denominator == 0:
        return 0.0, True
    return numerator / denominator, False


def metrics_from_confusion(tp: int, fp: int, tn: int, fn: int) -> Metrics:
    accuracy, acc_undefined = _ratio(tp + tn, tp + tn + fp + fn)
    sensitivity, sens_undefined = _ratio(tp, tp + fn)
    specificity, spec_undefined = _ratio(tn, tn + fp)
    flags = [
        name
        for name, flag in (("accuracy", acc_undefined), ("sensitivity", sens_undefined), ("specificity", spec_undefined))
        if flag
    ]
    return Metrics(accuracy, sensitivity, specificity, int(tp), int(fp), int(tn), int(fn), tuple(flags))


def metrics_from_predictions(y_true, y_pred) -> Metrics:
    y_true = np.asarray(y_true, dtype=int).ravel()
    y_pred = np.asarray(y_pred, dtype=int).ravel()
    if y_true.size == 0:
        return metrics_from_confusion(0, 0, 0, 0)
    tn, fp, fn, tp = confusion_matrix(y_true, y_pred, labels=[-1, 1]).ravel()
    return metrics_from_confusion(tp, fp, tn, fn)


def evaluate(model: TrainedClassifier, X: FeatureMatrix, y) -> Metrics:
    """Confusion counts and derived metrics of `model` on labelled rows."""
    return metrics_from_predictions(y, model.predict(X))
