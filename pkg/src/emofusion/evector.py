"""Emotion-vector (e-vector) text baseline.

Each training word gets a K-dimensional weight vector: component c is
the add-alpha smoothed share of the word's occurrences that fall in
class c, so every vector lies on the probability simplex. An utterance
is represented by the mean of its words' vectors; unseen words and
empty utterances fall back to the uniform vector. Word order never
matters.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConfigError, DegenerateDataError, FormatError, ShapeError
from .text import as_documents
from .utils import as_label_array

__all__ = [
    "EvectorVectorizer",
    "WordWeightTable",
    "evector_of",
    "fit_word_weights",
    "load_word_weights",
    "save_word_weights",
]


class WordWeightTable:
    """Per-word class-share vectors plus the smoothing setup."""

    def __init__(self, num_classes: int, alpha: float, weights: dict[str, np.ndarray]) -> None:
        if num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {num_classes}")
        if alpha <= 0.0:
            raise ConfigError(f"alpha must be positive, got {alpha}")
        self.num_classes = int(num_classes)
        self.alpha = float(alpha)
        self.weights = weights
        self._uniform = np.full(self.num_classes, 1.0 / self.num_classes)

    def __len__(self) -> int:
        return len(self.weights)

    def __contains__(self, word: str) -> bool:
        return word in self.weights

    def lookup(self, word: str) -> np.ndarray:
        """Weight vector for a word; unseen words get the uniform vector."""
        vec = self.weights.get(word)
        return self._uniform if vec is None else vec

    def digest(self) -> str:
        """Content hash of the fitted table, for leakage audits."""
        doc = {
            "num_classes": self.num_classes,
            "alpha": self.alpha,
            "weights": {w: [float(v) for v in vec] for w, vec in sorted(self.weights.items())},
        }
        blob = json.dumps(doc, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def fit_word_weights(
    documents: Sequence[Sequence[str]],
    labels: Sequence[int],
    num_classes: int,
    alpha: float = 1.0,
) -> WordWeightTable:
    """Estimate the table from tokenized training utterances.

    weight(w)[c] = (count(w, c) + alpha) / (count(w) + alpha * K), the
    add-alpha estimate of P(class | word).
    """
    docs = list(documents)
    y = np.asarray(labels)
    if len(docs) == 0:
        raise DegenerateDataError("e-vector fitting needs at least one utterance")
    if y.ndim != 1 or len(docs) != y.shape[0]:
        raise ShapeError(f"{len(docs)} documents but {y.shape} labels")
    if num_classes < 2:
        raise ConfigError(f"num_classes must be >= 2, got {num_classes}")
    if alpha <= 0.0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    if y.size and (y.min() < 0 or y.max() >= num_classes):
        raise IndexError(f"labels out of range for {num_classes} classes")

    counts: dict[str, np.ndarray] = {}
    for doc, label in zip(docs, y):
        c = int(label)
        for word in doc:
            row = counts.get(word)
            if row is None:
                row = np.zeros(num_classes)
                counts[word] = row
            row[c] += 1.0
    weights = {
        w: (row + alpha) / (row.sum() + alpha * num_classes) for w, row in counts.items()
    }
    return WordWeightTable(num_classes=num_classes, alpha=alpha, weights=weights)


def evector_of(tokens: Sequence[str], table: WordWeightTable) -> np.ndarray:
    """Mean word-weight vector of an utterance.

    A convex combination of simplex points, so the result sums to one
    with non-negative components. Empty input gives the uniform vector.
    """
    if len(tokens) == 0:
        return np.full(table.num_classes, 1.0 / table.num_classes)
    acc = np.zeros(table.num_classes)
    for t, token in enumerate(tokens):
        acc += (table.lookup(token) - acc) / (t + 1)
    return acc


def save_word_weights(path: str | Path, table: WordWeightTable) -> None:
    """Write the table as JSONL: a header line then one line per word.

    Words are sorted, floats use their exact shortest repr, so equal
    tables produce identical bytes.
    """
    with open(path, "w", encoding="utf-8") as handle:
        header = {"num_classes": table.num_classes, "alpha": table.alpha}
        handle.write(json.dumps(header, sort_keys=True) + "\n")
        for word in sorted(table.weights):
            row = {"word": word, "weights": [float(v) for v in table.weights[word]]}
            handle.write(json.dumps(row, sort_keys=True) + "\n")


def load_word_weights(path: str | Path) -> WordWeightTable:
    with open(path, encoding="utf-8") as handle:
        lines = [line for line in handle.read().splitlines() if line.strip()]
    if not lines:
        raise FormatError(f"{path}: empty word-weight file")
    try:
        header = json.loads(lines[0])
        num_classes = int(header["num_classes"])
        alpha = float(header["alpha"])
        weights: dict[str, np.ndarray] = {}
        for line in lines[1:]:
            row = json.loads(line)
            vec = np.asarray(row["weights"], dtype=np.float64)
            if vec.shape != (num_classes,):
                raise FormatError(
                    f"{path}: weight row for {row.get('word')!r} has wrong length"
                )
            weights[str(row["word"])] = vec
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: malformed word-weight file: {exc}") from exc
    return WordWeightTable(num_classes=num_classes, alpha=alpha, weights=weights)


class EvectorVectorizer(TransformerMixin, BaseEstimator):
    """Estimator wrapper: fit the word-weight table, transform documents.

    Accepts raw strings or pre-tokenized sequences, like McnnClassifier.
    """

    def __init__(self, alpha: float = 1.0, num_classes: int | None = None) -> None:
        self.alpha = alpha
        self.num_classes = num_classes

    def fit(self, X: Sequence, y: Sequence):
        docs = as_documents(X)
        labels, k = as_label_array(y, self.num_classes)
        if len(docs) != labels.shape[0]:
            raise ShapeError(f"{len(docs)} documents but {labels.shape[0]} labels")
        self.table_ = fit_word_weights(docs, labels, num_classes=k, alpha=float(self.alpha))
        self.classes_ = np.arange(k)
        return self

    def transform(self, X: Sequence) -> np.ndarray:
        check_is_fitted(self, "table_")
        return np.stack([evector_of(d, self.table_) for d in as_documents(X)])
