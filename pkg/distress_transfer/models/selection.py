# distress_transfer/models/selection.py
"""
Stratified k-fold splitting and grid search by mean cross-validated accuracy.

Every (grid point, fold) pair is an independent task fanned out over the
thread pool.
"""
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import StratifiedKFold

from ..errors import ModelError
from ..features import FeatureMatrix
from ..utils.parallel import map_tasks
from .base import ClassifierKind, Hyperparams, RFParams, SVMParams, TrainedClassifier
from .forest import train_rf
from .logistic import train_lr
from .metrics import evaluate
from .svm import train_svm_rbf

logger = logging.getLogger(__name__)

# Default SVM search box
SVM_C_RANGE = (0.25, 64.0)
SVM_SIGMA_RANGE = (0.001, 0.5)

TRAINERS: Dict[ClassifierKind, Callable[..., TrainedClassifier]] = {
    ClassifierKind.LR: train_lr,
    ClassifierKind.SVM: train_svm_rbf,
    ClassifierKind.RF: train_rf,
}


def train_classifier(X: FeatureMatrix, y, hp: Hyperparams) -> TrainedClassifier:
    """Dispatch to the trainer matching the hyperparameter record."""
    return TRAINERS[hp.kind](X, y, hp)


def kfold_split(labels: Sequence[int], k: int = 5, seed: int = 42) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    Stratified partition of row indices into k (train, test) folds.

    Test folds are disjoint and cover every row; per-class fold sizes differ
    by at most one.
    """
    y = np.asarray(labels).ravel()
    if y.size < k:
        raise ModelError(f"Cannot split {y.size} rows into {k} folds")
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    try:
        return [(train, test) for train, test in splitter.split(np.zeros(y.size), y)]
    except ValueError as e:
        raise ModelError(f"Cannot build {k} stratified folds: {e}") from e


def derive_seed(seed: int, task_index: int) -> int:
    return int(np.random.SeedSequence([seed, task_index]).generate_state(1)[0])


@dataclass(frozen=True)
class GridSpec:
    kind: ClassifierKind
    points: Tuple[Hyperparams, ...]

    def __post_init__(self):
        if not self.points:
            raise ModelError(f"Empty {self.kind.value} grid")
        if any(point.kind != self.kind for point in self.points):
            raise ModelError(f"Grid for {self.kind.value} mixes hyperparameter kinds")

    def __len__(self) -> int:
        return len(self.points)


def default_svm_grid(
    c_points: int = 8,
    sigma_points: int = 8,
    smo_tolerance: float = 1e-3,
    max_passes: int = 50,
) -> GridSpec:
    """Log-spaced C in [0.25, 64] x sigma in [0.001, 0.5], C-major."""
    cs = np.geomspace(*SVM_C_RANGE, num=c_points)
    sigmas = np.geomspace(*SVM_SIGMA_RANGE, num=sigma_points)
    points = tuple(
        SVMParams(C=float(c), sigma=float(s), smo_tolerance=smo_tolerance, max_passes=max_passes)
        for c in cs
        for s in sigmas
    )
    return GridSpec(ClassifierKind.SVM, points)


@dataclass(frozen=True)
class CvRecord:
    kind: str
    params: str
    fold: int
    accuracy: float

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "params": self.params, "fold": self.fold, "accuracy": self.accuracy}


def cv_table_to_csv(records: Sequence[CvRecord], path: Path) -> None:
    """CSV `kind,params,fold,accuracy`."""
    frame = pd.DataFrame([r.to_dict() for r in records], columns=["kind", "params", "fold", "accuracy"])
    frame.to_csv(path, index=False, lineterminator="\n")


def _tie_break_key(point: Hyperparams, position: int):
    if isinstance(point, SVMParams):
        return (point.C, point.sigma, position)
    return (position,)


def grid_search(
    X: FeatureMatrix,
    y,
    grid: GridSpec,
    k: int = 5,
    seed: int = 42,
    threads: int = 1,
) -> Tuple[Hyperparams, List[CvRecord]]:
    """
    Pick the grid point with the highest mean k-fold accuracy.

    Ties go to the smaller C then smaller sigma for SVM grids, to the first
    point in grid order otherwise. RF fold fits use a seed derived from
    (seed, task index).
    """
    y = np.asarray(y, dtype=int).ravel()
    folds = kfold_split(y, k, seed)
    tasks = [(p, f) for p in range(len(grid)) for f in range(len(folds))]

    def run(task_index: int) -> float:
        p, f = tasks[task_index]
        train_idx, test_idx = folds[f]
        hp = grid.points[p]
        if isinstance(hp, RFParams):
            hp = replace(hp, seed=derive_seed(seed, task_index))
        model = train_classifier(X.take_rows(train_idx), y[train_idx], hp)
        return evaluate(model, X.take_rows(test_idx), y[test_idx]).accuracy

    accuracies = map_tasks(run, range(len(tasks)), threads)

    records = [
        CvRecord(grid.kind.value, grid.points[p].label(), f, acc)
        for (p, f), acc in zip(tasks, accuracies)
    ]
    means = np.asarray(accuracies, dtype=float).reshape(len(grid), len(folds)).mean(axis=1)
    best = min(range(len(grid)), key=lambda p: (-means[p],) + _tie_break_key(grid.points[p], p))

    logger.info(
        f"Grid search complete: {{'kind': '{grid.kind.value}', 'points': {len(grid)}, 'folds': {len(folds)}, "
        f"'best': '{grid.points[best].label()}', 'cv_accuracy': {means[best]:.6f}}}"
    )
    return grid.points[best], records
