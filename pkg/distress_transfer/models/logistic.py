# distress_transfer/models/logistic.py
"""L2-regularised logistic regression trained by full-batch gradient descent."""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy.special import expit

from ..errors import ModelError
from ..features import FeatureMatrix
from .base import ClassifierKind, LRParams, TrainedClassifier, training_arrays

logger = logging.getLogger(__name__)

# Consecutive rejected steps before training is declared divergent
MAX_REJECTED_STEPS = 10


def lr_loss_and_gradient(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2_lambda: float) -> Tuple[float, np.ndarray, float]:
    """
    Mean negative log-likelihood plus (l2_lambda / 2) * |w|^2, with gradient.

    y holds +1 / -1 labels; the bias is not regularised.
    """
    targets = (y > 0).astype(float)
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - targets * z) + 0.5 * l2_lambda * (w @ w))
    residual = (expit(z) - targets) / X.shape[0]
    return loss, X.T @ residual + l2_lambda * w, float(residual.sum())


@dataclass(frozen=True, eq=False)
class LogisticModel(TrainedClassifier):
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bias: float = 0.0
    iterations: int = 0
    converged: bool = False
    loss_trace: Tuple[float, ...] = field(default=(), compare=False, repr=False)

    kind = ClassifierKind.LR

    def decision_values(self, values: np.ndarray) -> np.ndarray:
        return values @ self.weights + self.bias

    def ranked_features(self) -> List[Tuple[str, float]]:
        """(feature, weight) ordered by |weight| descending, ties by name."""
        pairs = zip(self.feature_names, self.weights.tolist())
        return sorted(pairs, key=lambda item: (-abs(item[1]), item[0]))

    def parameters(self) -> Dict[str, Any]:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "iterations": self.iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_parameters(cls, fingerprint, feature_names, hp, parameters):
        return cls(
            fingerprint=fingerprint,
            feature_names=tuple(feature_names),
            hp=hp,
            weights=np.asarray(parameters["weights"], dtype=float),
            bias=float(parameters["bias"]),
            iterations=int(parameters.get("iterations", 0)),
            converged=bool(parameters.get("converged", False)),
        )


def train_lr(X: FeatureMatrix, y, hp: LRParams = LRParams()) -> LogisticModel:
    """
    Fit weights and bias from zero initialisation.

    Stops when the gradient sup-norm drops below hp.tolerance or after
    hp.max_iters steps. A step that raises the loss is rejected and the step
    size halved; MAX_REJECTED_STEPS rejections in a row raise ModelError.
    """
    values, labels = training_arrays(X, y)
    w = np.zeros(values.shape[1])
    b = 0.0
    rate = hp.learning_rate
    loss, grad_w, grad_b = lr_loss_and_gradient(w, b, values, labels, hp.l2_lambda)
    trace = [loss]
    rejected = 0
    converged = False
    iteration = 0

    for iteration in range(1, hp.max_iters + 1):
        if max(float(np.max(np.abs(grad_w), initial=0.0)), abs(grad_b)) < hp.tolerance:
            converged = True
            break
        w_next = w - rate * grad_w
        b_next = b - rate * grad_b
        loss_next, grad_w_next, grad_b_next = lr_loss_and_gradient(w_next, b_next, values, labels, hp.l2_lambda)
        if loss_next <= loss:
            w, b, loss, grad_w, grad_b = w_next, b_next, loss_next, grad_w_next, grad_b_next
            trace.append(loss)
            rejected = 0
            continue
        rejected += 1
        rate /= 2.0
        if rejected >= MAX_REJECTED_STEPS:
            raise ModelError(
                f"Logistic regression diverged: loss increased {MAX_REJECTED_STEPS} consecutive steps; "
                f"use a learning rate smaller than {hp.learning_rate}"
            )
        logger.debug(f"LR step rejected: {{'iteration': {iteration}, 'loss': {loss}, 'rate': {rate}}}")

    logger.debug(
        f"LR trained: {{'iterations': {iteration}, 'converged': {converged}, 'loss': {loss:.8f}, "
        f"'learning_rate': {hp.learning_rate}, 'l2_lambda': {hp.l2_lambda}}}"
    )
    return LogisticModel(
        fingerprint=X.spec.fingerprint(),
        feature_names=tuple(X.spec.names),
        hp=hp,
        weights=w,
        bias=b,
        iterations=iteration,
        converged=converged,
        loss_trace=tuple(trace),
    )
