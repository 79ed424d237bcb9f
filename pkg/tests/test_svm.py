"""One-vs-rest Pegasos SVM behaviour."""

from __future__ import annotations

import numpy as np
import pytest

from emofusion.exceptions import (
    ConfigError,
    DegenerateDataError,
    NumericError,
    ShapeError,
)
from emofusion.svm import LinearSvmClassifier


def blobs(n_per_class=30, k=3, spread=0.3, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([[2.0, 0.0], [-2.0, 0.0], [0.0, 2.5]])[:k]
    X = np.vstack(
        [centers[c] + spread * rng.normal(size=(n_per_class, 2)) for c in range(k)]
    )
    y = np.repeat(np.arange(k), n_per_class)
    return X, y


def test_separable_data_fit_perfectly():
    X, y = blobs()
    clf = LinearSvmClassifier(c_reg=10.0, n_epochs=60).fit(X, y)
    assert (clf.predict(X) == y).mean() == 1.0


def test_objective_decreases():
    X, y = blobs(spread=0.8)
    clf = LinearSvmClassifier(n_epochs=40).fit(X, y)
    hist = clf.objective_history_
    assert hist.shape == (40, 3)
    # total objective at the end well below the start for every head
    assert (hist[-1] < hist[0]).all()
    assert (hist >= 0.0).all()


def test_deterministic_given_seed():
    X, y = blobs(spread=0.6)
    a = LinearSvmClassifier(seed=4).fit(X, y)
    b = LinearSvmClassifier(seed=4).fit(X, y)
    np.testing.assert_array_equal(a.weights_, b.weights_)
    c = LinearSvmClassifier(seed=5).fit(X, y)
    assert not np.array_equal(a.weights_, c.weights_)


def test_decision_function_shape_and_bias():
    X, y = blobs()
    clf = LinearSvmClassifier().fit(X, y)
    scores = clf.decision_function(X[:5])
    assert scores.shape == (5, 3)
    np.testing.assert_allclose(
        scores, X[:5] @ clf.coef_.T + clf.intercept_, rtol=1e-12
    )
    assert clf.n_features_in_ == 2
    assert clf.weights_.shape == (3, 3)  # bias folded in


def test_tie_goes_to_lowest_class_index():
    X, y = blobs(k=2)
    clf = LinearSvmClassifier().fit(X, y)
    clf.coef_ = np.zeros_like(clf.coef_)
    clf.intercept_ = np.zeros_like(clf.intercept_)
    preds = clf.predict(X[:4])
    np.testing.assert_array_equal(preds, np.zeros(4, dtype=np.int64))


def test_num_classes_override_keeps_empty_heads():
    X, y = blobs(k=2)
    clf = LinearSvmClassifier(num_classes=4).fit(X, y)
    assert clf.decision_function(X[:2]).shape == (2, 4)
    assert list(clf.classes_) == [0, 1, 2, 3]


def test_single_class_rejected():
    X = np.random.default_rng(0).normal(size=(10, 2))
    with pytest.raises(DegenerateDataError):
        LinearSvmClassifier().fit(X, np.zeros(10, dtype=int))


def test_bad_inputs_rejected():
    X, y = blobs(k=2)
    with pytest.raises(ShapeError):
        LinearSvmClassifier().fit(X.ravel(), y)
    with pytest.raises(ShapeError):
        LinearSvmClassifier().fit(X, y[:-1])
    with pytest.raises(ConfigError):
        LinearSvmClassifier(c_reg=0.0).fit(X, y)
    with pytest.raises(ConfigError):
        LinearSvmClassifier(n_epochs=0).fit(X, y)
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(NumericError):
        LinearSvmClassifier().fit(bad, y)


def test_inference_width_checked():
    X, y = blobs(k=2)
    clf = LinearSvmClassifier().fit(X, y)
    with pytest.raises(ShapeError):
        clf.predict(np.zeros((2, 5)))


def test_regularization_strength_matters():
    X, y = blobs(spread=0.6, k=2)
    tight = LinearSvmClassifier(c_reg=0.001, n_epochs=30).fit(X, y)
    loose = LinearSvmClassifier(c_reg=100.0, n_epochs=30).fit(X, y)
    # heavy regularization shrinks the weights
    assert np.linalg.norm(tight.coef_) < np.linalg.norm(loose.coef_)
