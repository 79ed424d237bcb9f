"""Linear SVM trained with one-vs-rest subgradient descent (Pegasos).

Each class gets a binary hinge-loss head against the rest; prediction
takes the head with the largest margin, ties going to the lowest class
index. The bias is folded in as a constant-one feature. Training is
deterministic given the seed, and the per-class regularized objective
is logged once per epoch so its decrease can be checked.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConfigError, DegenerateDataError, NumericError, ShapeError
from .utils import as_label_array, rng_for

__all__ = ["LinearSvmClassifier"]


class LinearSvmClassifier(ClassifierMixin, BaseEstimator):
    """One-vs-rest linear SVM on dense feature vectors.

    ``c_reg`` plays the usual C role: the per-head objective is
    (lambda / 2) * |w|^2 + mean hinge with lambda = 1 / (c_reg * n).
    ``objective_history_`` holds one (num_classes,) row per epoch.
    """

    def __init__(
        self,
        c_reg: float = 1.0,
        n_epochs: int = 50,
        seed: int = 0,
        num_classes: int | None = None,
    ) -> None:
        self.c_reg = c_reg
        self.n_epochs = n_epochs
        self.seed = seed
        self.num_classes = num_classes

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ShapeError(f"X must be a non-empty 2-D array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise NumericError("X contains NaN or infinity")
        labels, k = as_label_array(y, self.num_classes)
        if labels.shape[0] != X.shape[0]:
            raise ShapeError(f"{X.shape[0]} rows but {labels.shape[0]} labels")
        if np.unique(labels).size < 2:
            raise DegenerateDataError("training data holds fewer than 2 classes")
        if float(self.c_reg) <= 0.0:
            raise ConfigError(f"c_reg must be positive, got {self.c_reg}")
        if int(self.n_epochs) < 1:
            raise ConfigError(f"n_epochs must be >= 1, got {self.n_epochs}")

        n, d = X.shape
        xb = np.hstack([X, np.ones((n, 1))])
        # Per-class +/-1 targets: targets[i, c] = +1 iff labels[i] == c.
        targets = np.where(labels[:, None] == np.arange(k)[None, :], 1.0, -1.0)
        lam = 1.0 / (float(self.c_reg) * n)
        weights = np.zeros((k, d + 1))
        rng = rng_for(self.seed, 0)
        history = []
        t = 1
        for _ in range(int(self.n_epochs)):
            for i in rng.permutation(n):
                eta = 1.0 / (lam * t)
                x_i = xb[i]
                margins = targets[i] * (weights @ x_i)
                weights *= 1.0 - eta * lam
                violated = margins < 1.0
                if violated.any():
                    weights[violated] += eta * targets[i, violated][:, None] * x_i
                t += 1
            hinge = np.maximum(0.0, 1.0 - targets * (xb @ weights.T)).mean(axis=0)
            history.append(0.5 * lam * (weights * weights).sum(axis=1) + hinge)

        self.classes_ = np.arange(k)
        self.weights_ = weights
        self.coef_ = weights[:, :-1]
        self.intercept_ = weights[:, -1]
        self.objective_history_ = np.stack(history)
        self.n_features_in_ = d
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "weights_")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ShapeError(
                f"X must have shape (n, {self.n_features_in_}), got {X.shape}"
            )
        if not np.all(np.isfinite(X)):
            raise NumericError("X contains NaN or infinity")
        return X @ self.coef_.T + self.intercept_

    def predict(self, X) -> np.ndarray:
        # argmax takes the first maximum, so ties go to the lowest index.
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]
