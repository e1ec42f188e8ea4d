"""
Unit tests for L2 logistic regression
"""
import unittest

import numpy as np

from distress_transfer.errors import ModelError, PredictionError
from distress_transfer.models import LRParams, LogisticModel, evaluate, train_lr
from distress_transfer.models.logistic import lr_loss_and_gradient
from helpers import matrix, two_clusters


class TestLossAndGradient(unittest.TestCase):
    """Test cases for lr_loss_and_gradient"""

    def test_gradient_matches_finite_differences(self):
        """Analytic gradient vs central differences: 10 random points x 10 random datasets"""
        h = 1e-6
        for dataset in range(10):
            rng = np.random.default_rng(dataset)
            X = rng.normal(size=(30, 4))
            y = np.where(rng.random(30) < 0.5, 1, -1)
            lam = 10.0 ** rng.uniform(-4, -1)
            for point in range(10):
                w = rng.normal(size=4)
                b = float(rng.normal())
                _, grad_w, grad_b = lr_loss_and_gradient(w, b, X, y, lam)
                numeric = np.zeros(5)
                for j in range(4):
                    step = np.zeros(4)
                    step[j] = h
                    up = lr_loss_and_gradient(w + step, b, X, y, lam)[0]
                    down = lr_loss_and_gradient(w - step, b, X, y, lam)[0]
                    numeric[j] = (up - down) / (2 * h)
                numeric[4] = (lr_loss_and_gradient(w, b + h, X, y, lam)[0] - lr_loss_and_gradient(w, b - h, X, y, lam)[0]) / (2 * h)
                with self.subTest(dataset=dataset, point=point):
                    np.testing.assert_allclose(np.append(grad_w, grad_b), numeric, rtol=1e-5, atol=1e-8)

    def test_zero_weights(self):
        """Zero weights on balanced symmetric data: loss log 2, zero bias gradient"""
        X = np.array([[-1.0], [1.0], [-2.0], [2.0]])
        y = np.array([-1, 1, -1, 1])
        loss, _, grad_b = lr_loss_and_gradient(np.zeros(1), 0.0, X, y, 1e-3)
        self.assertAlmostEqual(loss, np.log(2.0), places=12)
        self.assertEqual(grad_b, 0.0)


class TestTrainLr(unittest.TestCase):
    """Test cases for train_lr"""

    def test_one_dimensional_separable(self):
        m = matrix([[-1.0], [1.0]], [-1, 1])
        model = train_lr(m, m.y)
        self.assertEqual(evaluate(model, m, m.y).accuracy, 1.0)
        self.assertGreater(model.weights[0], 0.0)

    def test_untrained_model_predicts_control(self):
        m = matrix([[-1.0], [1.0]], [-1, 1])
        untrained = LogisticModel(
            fingerprint=m.spec.fingerprint(),
            feature_names=tuple(m.spec.names),
            hp=LRParams(),
            weights=np.zeros(1),
            bias=0.0,
        )
        np.testing.assert_array_equal(untrained.decision_function(m), [0.0, 0.0])
        # A decision value of exactly 0 predicts Control
        np.testing.assert_array_equal(untrained.predict(m), [-1, -1])

    def test_loss_non_increasing(self):
        m = two_clusters(n_per_class=30, gap=1.0, seed=4)
        model = train_lr(m, m.y, LRParams(learning_rate=2.0, max_iters=300))
        trace = np.asarray(model.loss_trace)
        self.assertTrue(np.all(np.diff(trace) <= 0.0))
        self.assertLess(trace[-1], trace[0])

    def test_convergence_flag(self):
        m = two_clusters(n_per_class=20, gap=1.0, seed=5)
        model = train_lr(m, m.y, LRParams(learning_rate=0.5, l2_lambda=0.1, max_iters=5000, tolerance=1e-6))
        self.assertTrue(model.converged)
        self.assertLess(model.iterations, 5000)

    def test_invalid_training_sets(self):
        m = matrix([[0.0], [1.0]], [1, 1])
        cases = [
            (m, [1, 1], "single class"),
            (m, [1, 0], "unlabelled row"),
            (m, [1, -1, 1], "length mismatch"),
        ]
        for X, y, description in cases:
            with self.subTest(description=description):
                with self.assertRaises(ModelError):
                    train_lr(X, y)

    def test_invalid_hyperparameters(self):
        with self.assertRaises(ModelError):
            LRParams(learning_rate=0.0)

    def test_ranked_features(self):
        model = LogisticModel(
            fingerprint="x",
            feature_names=("b", "a", "c"),
            hp=LRParams(),
            weights=np.array([0.5, -2.0, 0.5]),
        )
        self.assertEqual([name for name, _ in model.ranked_features()], ["a", "b", "c"])

    def test_refuses_other_spec(self):
        m = matrix([[-1.0], [1.0]], [-1, 1])
        model = train_lr(m, m.y)
        other = matrix([[-1.0], [1.0]], [-1, 1], names=["other"])
        with self.assertRaises(PredictionError):
            model.predict(other)


if __name__ == "__main__":
    unittest.main()
