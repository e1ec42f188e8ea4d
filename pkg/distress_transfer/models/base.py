# distress_transfer/models/base.py
"""Classifier kinds, hyperparameter records and the shared TrainedClassifier contract."""
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, ClassVar, Dict, Optional, Tuple, Union

import numpy as np

from ..errors import ModelError, PredictionError
from ..features import FeatureMatrix


class ClassifierKind(str, Enum):
    LR = "lr"
    SVM = "svm"
    RF = "rf"

    @property
    def order(self) -> int:
        """Fixed tie-break order: LR < SVM < RF."""
        return KIND_ORDER[self]


KIND_ORDER = {ClassifierKind.LR: 0, ClassifierKind.SVM: 1, ClassifierKind.RF: 2}


def _require_positive(owner: str, **values: float) -> None:
    for name, value in values.items():
        if value is None or not value > 0:
            raise ModelError(f"{owner}.{name} must be positive, got {value}")


@dataclass(frozen=True)
class LRParams:
    learning_rate: float = 0.1
    l2_lambda: float = 1e-3
    max_iters: int = 5000
    tolerance: float = 1e-6

    kind: ClassVar[ClassifierKind] = ClassifierKind.LR

    def __post_init__(self):
        _require_positive("lr", learning_rate=self.learning_rate, l2_lambda=self.l2_lambda,
                          max_iters=self.max_iters, tolerance=self.tolerance)

    def label(self) -> str:
        return f"learning_rate={self.learning_rate:g};l2_lambda={self.l2_lambda:g}"


@dataclass(frozen=True)
class RFParams:
    n_trees: int = 200
    max_depth: int = 12
    features_per_split: Optional[int] = None  # None: floor(sqrt(n_features))
    min_leaf: int = 2
    seed: int = 42

    kind: ClassVar[ClassifierKind] = ClassifierKind.RF

    def __post_init__(self):
        _require_positive("rf", n_trees=self.n_trees, min_leaf=self.min_leaf)
        if self.max_depth < 0:
            raise ModelError(f"rf.max_depth must be >= 0, got {self.max_depth}")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ModelError(f"rf.features_per_split must be >= 1, got {self.features_per_split}")

    def label(self) -> str:
        return f"n_trees={self.n_trees};max_depth={self.max_depth}"


@dataclass(frozen=True)
class SVMParams:
    """RBF kernel K(u, v) = exp(-sigma * |u - v|^2); sigma scales the squared distance."""

    C: float = 1.0
    sigma: float = 0.1
    smo_tolerance: float = 1e-3
    max_passes: int = 50

    kind: ClassVar[ClassifierKind] = ClassifierKind.SVM

    def __post_init__(self):
        _require_positive("svm", C=self.C, sigma=self.sigma, smo_tolerance=self.smo_tolerance,
                          max_passes=self.max_passes)

    def label(self) -> str:
        return f"C={self.C:g};sigma={self.sigma:g}"


Hyperparams = Union[LRParams, RFParams, SVMParams]
PARAMS_BY_KIND = {ClassifierKind.LR: LRParams, ClassifierKind.RF: RFParams, ClassifierKind.SVM: SVMParams}


def params_to_dict(hp: Hyperparams) -> Dict[str, Any]:
    return {"kind": hp.kind.value, **asdict(hp)}


def params_from_dict(data: Dict[str, Any]) -> Hyperparams:
    data = dict(data)
    kind = ClassifierKind(data.pop("kind"))
    return PARAMS_BY_KIND[kind](**data)


def training_arrays(matrix: FeatureMatrix, y) -> Tuple[np.ndarray, np.ndarray]:
    """Validate a training set: labels in {-1, +1}, one per row, both classes present."""
    y = np.asarray(y, dtype=int).ravel()
    if y.shape[0] != matrix.n_rows:
        raise ModelError(f"{matrix.n_rows} rows but {y.shape[0]} labels")
    if not np.all(np.isin(y, (-1, 1))):
        raise ModelError("Training labels must be Distress (+1) or Control (-1)")
    if np.unique(y).size < 2:
        raise ModelError("Training data contains a single class")
    return matrix.values, y


@dataclass(frozen=True, eq=False)
class TrainedClassifier(ABC):
    """
    A fitted classifier bound to the FeatureSpec it was trained on.

    Distress (+1) is the positive class; a decision value > 0 predicts
    Distress, anything else Control.
    """

    fingerprint: str
    feature_names: Tuple[str, ...]
    hp: Hyperparams

    kind: ClassVar[ClassifierKind]

    def check_matrix(self, matrix: FeatureMatrix) -> np.ndarray:
        if matrix.spec.fingerprint() != self.fingerprint:
            raise PredictionError(
                f"{self.kind.value} model was trained on another feature spec "
                f"({self.fingerprint[:12]} != {matrix.spec.fingerprint()[:12]})"
            )
        return matrix.values

    @abstractmethod
    def decision_values(self, values: np.ndarray) -> np.ndarray:
        """Raw decision values for an already-checked value array."""

    def decision_function(self, matrix: FeatureMatrix) -> np.ndarray:
        return self.decision_values(self.check_matrix(matrix))

    def predict(self, matrix: FeatureMatrix) -> np.ndarray:
        """+1 Distress / -1 Control per row."""
        return np.where(self.decision_function(matrix) > 0, 1, -1)

    @abstractmethod
    def parameters(self) -> Dict[str, Any]:
        """JSON-ready fitted parameters."""

    @classmethod
    @abstractmethod
    def from_parameters(cls, fingerprint: str, feature_names, hp: Hyperparams, parameters: Dict[str, Any]):
        ...
