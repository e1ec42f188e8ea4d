# distress_transfer/models/svm.py
"""
Soft-margin SVM with an RBF kernel, trained by sequential minimal optimization.

The dual  min 1/2 a'Qa - sum(a)  s.t.  0 <= a <= C, y'a = 0  with
Q_ij = y_i y_j K(x_i, x_j) is solved two multipliers at a time. Each step
takes the maximal violating pair and solves the two-variable subproblem
analytically, clipping to the box.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np
from scipy.spatial.distance import cdist

from ..features import FeatureMatrix
from .base import ClassifierKind, SVMParams, TrainedClassifier, training_arrays

logger = logging.getLogger(__name__)

TAU = 1e-12


def rbf_kernel(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    """K(u, v) = exp(-sigma * |u - v|^2)."""
    return np.exp(-sigma * cdist(a, b, "sqeuclidean"))


def dual_objective(alpha: np.ndarray, y: np.ndarray, K: np.ndarray) -> float:
    """1/2 a'Qa - sum(a) for the minimisation form of the dual."""
    ay = alpha * y
    return float(0.5 * ay @ K @ ay - alpha.sum())


@dataclass(frozen=True)
class SmoResult:
    alpha: np.ndarray
    rho: float
    iterations: int
    converged: bool
    gap: float


def _select_pair(alpha, y, grad, C):
    """Maximal violating pair (i, j) and the KKT gap m(a) - M(a)."""
    minus_yg = -y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    if not up.any() or not low.any():
        return -1, -1, 0.0
    up_scores = np.where(up, minus_yg, -np.inf)
    low_scores = np.where(low, minus_yg, np.inf)
    i = int(np.argmax(up_scores))
    j = int(np.argmin(low_scores))
    return i, j, float(up_scores[i] - low_scores[j])


def _solve_pair(i, j, alpha, y, grad, K, C):
    """Analytic two-variable update with box clipping; returns new (a_i, a_j)."""
    a_i, a_j = alpha[i], alpha[j]
    quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
    if quad <= 0:
        quad = TAU
    if y[i] != y[j]:
        delta = (-grad[i] - grad[j]) / quad
        diff = a_i - a_j
        a_i += delta
        a_j += delta
        if diff > 0:
            if a_j < 0:
                a_j = 0.0
                a_i = diff
        elif a_i < 0:
            a_i = 0.0
            a_j = -diff
        if diff > 0:
            if a_i > C:
                a_i = C
                a_j = C - diff
        elif a_j > C:
            a_j = C
            a_i = C + diff
    else:
        delta = (grad[i] - grad[j]) / quad
        total = a_i + a_j
        a_i -= delta
        a_j += delta
        if total > C:
            if a_i > C:
                a_i = C
                a_j = total - C
        elif a_j < 0:
            a_j = 0.0
            a_i = total
        if total > C:
            if a_j > C:
                a_j = C
                a_i = total - C
        elif a_i < 0:
            a_i = 0.0
            a_j = total
    return a_i, a_j


def _compute_rho(alpha, y, grad, C) -> float:
    """Bias term: mean y*grad over free multipliers, midpoint of the feasible interval otherwise."""
    yg = y * grad
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(yg[free].mean())
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = float(yg[ub_mask].min()) if ub_mask.any() else np.inf
    lb = float(yg[lb_mask].max()) if lb_mask.any() else -np.inf
    return (ub + lb) / 2.0


def smo(K: np.ndarray, y: np.ndarray, C: float, tolerance: float, max_iters: int) -> SmoResult:
    """Run SMO on a precomputed kernel matrix; y holds +1 / -1."""
    y = y.astype(float)
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    gap = np.inf
    iterations = 0
    converged = False
    while iterations < max_iters:
        i, j, gap = _select_pair(alpha, y, grad, C)
        if i < 0 or gap < tolerance:
            converged = True
            break
        old_i, old_j = alpha[i], alpha[j]
        new_i, new_j = _solve_pair(i, j, alpha, y, grad, K, C)
        alpha[i], alpha[j] = new_i, new_j
        grad += y * (y[i] * K[:, i] * (new_i - old_i) + y[j] * K[:, j] * (new_j - old_j))
        iterations += 1
    return SmoResult(alpha=alpha, rho=_compute_rho(alpha, y, grad, C), iterations=iterations,
                     converged=converged, gap=float(gap))


@dataclass(frozen=True, eq=False)
class SvmModel(TrainedClassifier):
    support_vectors: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    dual_coef: np.ndarray = field(default_factory=lambda: np.zeros(0))  # alpha_i * y_i
    rho: float = 0.0
    converged: bool = True

    kind = ClassifierKind.SVM

    def decision_values(self, values: np.ndarray) -> np.ndarray:
        if not len(self.dual_coef):
            return np.full(values.shape[0], -self.rho)
        return rbf_kernel(values, self.support_vectors, self.hp.sigma) @ self.dual_coef - self.rho

    def parameters(self) -> Dict[str, Any]:
        return {
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "rho": self.rho,
            "converged": self.converged,
        }

    @classmethod
    def from_parameters(cls, fingerprint, feature_names, hp, parameters):
        vectors = np.asarray(parameters["support_vectors"], dtype=float).reshape(-1, len(feature_names))
        return cls(
            fingerprint=fingerprint,
            feature_names=tuple(feature_names),
            hp=hp,
            support_vectors=vectors,
            dual_coef=np.asarray(parameters["dual_coef"], dtype=float),
            rho=float(parameters["rho"]),
            converged=bool(parameters.get("converged", True)),
        )


def train_svm_rbf(X: FeatureMatrix, y, hp: SVMParams = SVMParams()) -> SvmModel:
    """
    Fit an RBF SVM; only support vectors (alpha > 0) are kept.

    Iterations are capped at hp.max_passes x n_rows; hitting the cap logs a
    warning and returns the current solution.
    """
    values, labels = training_arrays(X, y)
    K = rbf_kernel(values, values, hp.sigma)
    result = smo(K, labels, hp.C, hp.smo_tolerance, hp.max_passes * values.shape[0])
    if not result.converged:
        logger.warning(
            f"SMO did not converge: {{'C': {hp.C}, 'sigma': {hp.sigma}, 'iterations': {result.iterations}, "
            f"'kkt_gap': {result.gap:.6g}, 'tolerance': {hp.smo_tolerance}}}"
        )
    support = result.alpha > 0
    logger.debug(
        f"SVM trained: {{'C': {hp.C}, 'sigma': {hp.sigma}, 'support_vectors': {int(support.sum())}, "
        f"'iterations': {result.iterations}, 'converged': {result.converged}}}"
    )
    return SvmModel(
        fingerprint=X.spec.fingerprint(),
        feature_names=tuple(X.spec.names),
        hp=hp,
        support_vectors=values[support].copy(),
        dual_coef=result.alpha[support] * labels[support],
        rho=result.rho,
        converged=result.converged,
    )
