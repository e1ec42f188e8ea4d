# Classifiers, cross-validation and evaluation
from .artifact import load_model, save_model
from .base import ClassifierKind, Hyperparams, LRParams, RFParams, SVMParams, TrainedClassifier
from .forest import ForestModel, train_rf
from .logistic import LogisticModel, train_lr
from .metrics import Metrics, evaluate, metrics_from_confusion
from .selection import CvRecord, GridSpec, default_svm_grid, grid_search, kfold_split, train_classifier
from .svm import SvmModel, train_svm_rbf

__all__ = [
    "ClassifierKind",
    "CvRecord",
    "ForestModel",
    "GridSpec",
    "Hyperparams",
    "LRParams",
    "LogisticModel",
    "Metrics",
    "RFParams",
    "SVMParams",
    "SvmModel",
    "TrainedClassifier",
    "default_svm_grid",
    "evaluate",
    "grid_search",
    "kfold_split",
    "load_model",
    "metrics_from_confusion",
    "save_model",
    "train_classifier",
    "train_lr",
    "train_rf",
    "train_svm_rbf",
]
