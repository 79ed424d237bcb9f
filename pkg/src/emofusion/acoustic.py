"""Acoustic model: stacked LSTM, temporal mean pooling, dense classifier.

Input is a per-utterance sequence of frame-level feature vectors (rows
are frames at a fixed hop, e.g. 88-dimensional functionals every 10 ms).
The hidden states of the last LSTM layer are mean-pooled over time, so
utterances of any length map to one fixed-size vector, which feeds a
relu dense layer, dropout, and a softmax output layer.

Features are z-scored with statistics estimated on the training portion
only; the fitted statistics travel with the model checkpoint.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .checkpoint import load_checkpoint, save_checkpoint
from .exceptions import (
    ConfigError,
    EmptySequenceError,
    FormatError,
    NumericError,
    ShapeError,
)
from .nn.layers import (
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
    mean_pool_backward,
    mean_pool_forward,
    softmax,
    softmax_cross_entropy,
)
from .nn.lstm import LstmLayer, lstm_layer_backward, lstm_layer_forward
from .nn.params import Parameter, adam_update, uniform_init
from .utils import as_label_array, rng_for, safe_mean_recall

__all__ = [
    "AcousticLstmClassifier",
    "AcousticModel",
    "acoustic_preset",
    "load_feature_csv",
]

_INIT_STREAM = 0
_SHUFFLE_STREAM = 1
_DROPOUT_STREAM = 2


def acoustic_preset(name: str) -> dict:
    """Constructor arguments for the two reference setups.

    "iemocap": two stacked 256-unit LSTM layers, a 256-unit dense layer
    with dropout 0.5, four classes. "callcenter": one 96-unit LSTM over
    three classes; the 96-unit dense layer mirrors the LSTM width (the
    reference setup does not pin it, so this is an assumption).
    """
    presets = {
        "iemocap": {
            "lstm_units": (256, 256),
            "dense_units": 256,
            "num_classes": 4,
            "dropout": 0.5,
            "batch_size": 40,
        },
        "callcenter": {
            "lstm_units": (96,),
            "dense_units": 96,
            "num_classes": 3,
            "dropout": 0.5,
            "batch_size": 40,
        },
    }
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; use one of {sorted(presets)}")
    return dict(presets[name])


def load_feature_csv(path: str | Path) -> np.ndarray:
    """Read a (T, D) frame matrix from a headerless CSV file.

    Every row is one frame; all rows must have the same width and hold
    finite numbers. An empty file is rejected.
    """
    rows: list[list[float]] = []
    with open(path, newline="", encoding="utf-8") as handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise FormatError(f"{path}:{line_no}: non-numeric value: {exc}") from exc
            if len(rows[-1]) != len(rows[0]):
                raise FormatError(
                    f"{path}:{line_no}: row width {len(rows[-1])} != {len(rows[0])}"
                )
    if not rows:
        raise EmptySequenceError(f"{path}: no frames")
    arr = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{path}: features contain NaN or infinity")
    return arr


def save_feature_csv(path: str | Path, frames: np.ndarray) -> None:
    """Write a (T, D) frame matrix as headerless CSV with exact floats."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise ShapeError(f"frames must be a non-empty 2-D array, got shape {frames.shape}")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        for row in frames:
            writer.writerow([repr(float(v)) for v in row])


@dataclass
class AcousticForward:
    """One utterance's forward products."""

    pooled: np.ndarray  # (H,)
    logits: np.ndarray  # (K,)
    posteriors: np.ndarray  # (K,)
    cache: tuple | None


class AcousticModel:
    """Parameter container plus forward/backward for the acoustic net."""

    def __init__(
        self,
        input_dim: int,
        lstm_units: Sequence[int],
        dense_units: int,
        num_classes: int,
        dropout: float,
        rng: np.random.Generator,
    ) -> None:
        units = tuple(int(u) for u in lstm_units)
        if not units or any(u < 1 for u in units):
            raise ConfigError(f"lstm_units must be positive, got {lstm_units}")
        if input_dim < 1 or dense_units < 1:
            raise ConfigError("input_dim and dense_units must be >= 1")
        if num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {num_classes}")
        if not 0.0 <= dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {dropout}")
        self.input_dim = int(input_dim)
        self.lstm_units = units
        self.dense_units = int(dense_units)
        self.num_classes = int(num_classes)
        self.dropout = float(dropout)
        self.layers: list[LstmLayer] = []
        prev = self.input_dim
        for u in units:
            self.layers.append(LstmLayer(prev, u, rng))
            prev = u
        self.params: dict[str, Parameter] = {}
        for li, layer in enumerate(self.layers):
            for pname, p in layer.parameters().items():
                self.params[f"lstm{li}_{pname}"] = p
        self.params["dense_w"] = Parameter(uniform_init(rng, (self.dense_units, prev)))
        self.params["dense_b"] = Parameter(np.zeros(self.dense_units))
        self.params["out_w"] = Parameter(
            uniform_init(rng, (self.num_classes, self.dense_units))
        )
        self.params["out_b"] = Parameter(np.zeros(self.num_classes))

    def forward(
        self,
        frames: np.ndarray,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> AcousticForward:
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 2:
            raise ShapeError(f"frames must be 2-D, got shape {frames.shape}")
        if frames.shape[0] == 0:
            raise EmptySequenceError("an utterance needs at least one frame")
        if frames.shape[1] != self.input_dim:
            raise ShapeError(
                f"frame width {frames.shape[1]} != expected {self.input_dim}"
            )
        seq = frames
        lstm_caches = []
        for layer in self.layers:
            seq, cache = lstm_layer_forward(layer, seq)
            lstm_caches.append(cache)
        pooled = mean_pool_forward(seq)
        hidden, z1 = dense_forward(
            pooled, self.params["dense_w"].value, self.params["dense_b"].value, "relu"
        )
        mode = "train" if train else "eval"
        dropped, mask = dropout_forward(hidden, self.dropout, mode, rng)
        logits, z2 = dense_forward(
            dropped, self.params["out_w"].value, self.params["out_b"].value, "linear"
        )
        cache = (frames.shape[0], lstm_caches, pooled, z1, mask, hidden, dropped, z2)
        return AcousticForward(
            pooled=pooled, logits=logits, posteriors=softmax(logits), cache=cache
        )

    def backward(self, cache: tuple, d_logits: np.ndarray) -> None:
        """Accumulate gradients for one utterance into the parameters."""
        steps, lstm_caches, pooled, z1, mask, hidden, dropped, z2 = cache
        d_dropped, d_w2, d_b2 = dense_backward(
            dropped, self.params["out_w"].value, z2, d_logits, "linear"
        )
        self.params["out_w"].grad += d_w2
        self.params["out_b"].grad += d_b2
        d_hidden = dropout_backward(d_dropped, mask)
        d_pooled, d_w1, d_b1 = dense_backward(
            pooled, self.params["dense_w"].value, z1, d_hidden, "relu"
        )
        self.params["dense_w"].grad += d_w1
        self.params["dense_b"].grad += d_b1
        d_seq = mean_pool_backward(d_pooled, steps)
        for li in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[li]
            d_seq, d_wx, d_wh, d_b = lstm_layer_backward(layer, lstm_caches[li], d_seq)
            self.params[f"lstm{li}_wx"].grad += d_wx
            self.params[f"lstm{li}_wh"].grad += d_wh
            self.params[f"lstm{li}_b"].grad += d_b
        # d_seq is now the gradient on the input frames; inputs are data,
        # so it stops here.

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self.params.items()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        for name, value in snapshot.items():
            self.params[name].value[...] = value


def _check_sequences(x: Sequence, expect_dim: int | None = None) -> list[np.ndarray]:
    seqs: list[np.ndarray] = []
    dim = expect_dim
    for pos, item in enumerate(x):
        arr = np.asarray(item, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ShapeError(
                f"sequence {pos} must be a non-empty (T, D) array, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"sequence {pos} contains NaN or infinity")
        if dim is None:
            dim = arr.shape[1]
        elif arr.shape[1] != dim:
            raise ShapeError(
                f"sequence {pos} has width {arr.shape[1]}, expected {dim}"
            )
        seqs.append(arr)
    if not seqs:
        raise ShapeError("need at least one sequence")
    return seqs


class AcousticLstmClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Stacked-LSTM classifier over frame-feature sequences.

    ``fit`` takes a list of (T_i, D) arrays. Features are z-scored with
    training-set statistics (constant dimensions keep scale 1).
    ``transform`` returns the pooled hidden state per utterance;
    ``predict_proba`` the class posteriors. Validation snapshotting and
    early stopping mirror McnnClassifier.
    """

    def __init__(
        self,
        lstm_units: Sequence[int] = (256, 256),
        dense_units: int = 256,
        num_classes: int | None = None,
        dropout: float = 0.5,
        learning_rate: float = 0.001,
        batch_size: int = 40,
        n_epochs: int = 30,
        seed: int = 0,
        early_stop_train_ua: float | None = None,
        normalize: bool = True,
    ) -> None:
        self.lstm_units = lstm_units
        self.dense_units = dense_units
        self.num_classes = num_classes
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.n_epochs = n_epochs
        self.seed = seed
        self.early_stop_train_ua = early_stop_train_ua
        self.normalize = normalize

    # ------------------------------------------------------------- fitting

    def fit(self, X: Sequence, y: Sequence, validation: tuple | None = None):
        seqs = _check_sequences(X)
        labels, k = as_label_array(y, self.num_classes)
        if len(seqs) != labels.shape[0]:
            raise ShapeError(f"{len(seqs)} sequences but {labels.shape[0]} labels")
        if self.batch_size < 1 or self.n_epochs < 1:
            raise ConfigError("batch_size and n_epochs must be >= 1")
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        dim = seqs[0].shape[1]

        if self.normalize:
            stacked = np.concatenate(seqs, axis=0)
            mean = stacked.mean(axis=0)
            std = stacked.std(axis=0)
            scale = np.where(std > 1e-8, std, 1.0)
        else:
            mean = np.zeros(dim)
            scale = np.ones(dim)
        self.feature_mean_ = mean
        self.feature_scale_ = scale
        seqs = [(s - mean) / scale for s in seqs]

        model = AcousticModel(
            input_dim=dim,
            lstm_units=self.lstm_units,
            dense_units=self.dense_units,
            num_classes=k,
            dropout=self.dropout,
            rng=rng_for(self.seed, _INIT_STREAM),
        )

        val_seqs: list[np.ndarray] | None = None
        val_labels: np.ndarray | None = None
        if validation is not None:
            vx, vy = validation
            val_seqs = [(s - mean) / scale for s in _check_sequences(vx, dim)]
            val_labels, _ = as_label_array(vy, k)

        shuffle_rng = rng_for(self.seed, _SHUFFLE_STREAM)
        dropout_rng = rng_for(self.seed, _DROPOUT_STREAM)
        history: list[dict] = []
        best_snapshot: dict[str, np.ndarray] | None = None
        best_val = -1.0
        best_epoch = -1
        stopped_epoch: int | None = None

        n = len(seqs)
        for epoch in range(self.n_epochs):
            order = shuffle_rng.permutation(n)
            losses: list[float] = []
            for start in range(0, n, self.batch_size):
                chosen = order[start : start + self.batch_size]
                grads_scale = 1.0 / len(chosen)
                for i in chosen:
                    out = model.forward(seqs[i], train=True, rng=dropout_rng)
                    loss, _, d_logits = softmax_cross_entropy(
                        out.logits, int(labels[i])
                    )
                    model.backward(out.cache, d_logits * grads_scale)
                    losses.append(loss)
                for p in model.params.values():
                    adam_update(p, learning_rate=float(self.learning_rate))

            record: dict = {"epoch": epoch, "train_loss": float(np.mean(losses))}
            if val_seqs is not None and val_labels is not None:
                preds = np.array(
                    [int(np.argmax(model.forward(s).posteriors)) for s in val_seqs]
                )
                val_ua = safe_mean_recall(val_labels, preds, k)
                record["val_ua"] = val_ua
                record["val_wa"] = float(np.mean(preds == val_labels))
                if val_ua > best_val:
                    best_val = val_ua
                    best_epoch = epoch
                    best_snapshot = model.snapshot()
            if self.early_stop_train_ua is not None:
                train_preds = np.array(
                    [int(np.argmax(model.forward(s).posteriors)) for s in seqs]
                )
                train_ua = safe_mean_recall(labels, train_preds, k)
                record["train_ua"] = train_ua
                history.append(record)
                if train_ua > float(self.early_stop_train_ua):
                    stopped_epoch = epoch
                    break
            else:
                history.append(record)

        if best_snapshot is not None:
            model.restore(best_snapshot)

        self.classes_ = np.arange(k)
        self.model_ = model
        self.history_ = history
        self.best_epoch_ = best_epoch if best_snapshot is not None else None
        self.stopped_epoch_ = stopped_epoch
        return self

    # ----------------------------------------------------------- inference

    def _prepare(self, X: Sequence) -> list[np.ndarray]:
        check_is_fitted(self, "model_")
        seqs = _check_sequences(X, self.model_.input_dim)
        return [(s - self.feature_mean_) / self.feature_scale_ for s in seqs]

    def predict_proba(self, X: Sequence) -> np.ndarray:
        return np.stack(
            [self.model_.forward(s).posteriors for s in self._prepare(X)]
        )

    def predict(self, X: Sequence) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def transform(self, X: Sequence) -> np.ndarray:
        """Pooled top-layer hidden state, one row per utterance."""
        return np.stack([self.model_.forward(s).pooled for s in self._prepare(X)])

    # --------------------------------------------------------- persistence

    def save(self, path: str | Path) -> None:
        check_is_fitted(self, "model_")
        m = self.model_
        arrays = {name: p.value for name, p in m.params.items()}
        arrays["feature_mean"] = self.feature_mean_
        arrays["feature_scale"] = self.feature_scale_
        save_checkpoint(
            path,
            kind="acoustic_lstm",
            config={
                "input_dim": m.input_dim,
                "lstm_units": list(m.lstm_units),
                "dense_units": m.dense_units,
                "num_classes": m.num_classes,
                "dropout": m.dropout,
            },
            arrays=arrays,
            extra={
                "params": {
                    "learning_rate": float(self.learning_rate),
                    "batch_size": int(self.batch_size),
                    "n_epochs": int(self.n_epochs),
                    "seed": int(self.seed),
                    "normalize": bool(self.normalize),
                }
            },
        )

    @classmethod
    def load(cls, path: str | Path) -> "AcousticLstmClassifier":
        _, config, arrays, extra = load_checkpoint(path, expected_kind="acoustic_lstm")
        stored = extra.get("params", {})
        clf = cls(
            lstm_units=tuple(config["lstm_units"]),
            dense_units=int(config["dense_units"]),
            num_classes=int(config["num_classes"]),
            dropout=float(config["dropout"]),
            learning_rate=stored.get("learning_rate", 0.001),
            batch_size=stored.get("batch_size", 40),
            n_epochs=stored.get("n_epochs", 30),
            seed=stored.get("seed", 0),
            normalize=stored.get("normalize", True),
        )
        model = AcousticModel(
            input_dim=int(config["input_dim"]),
            lstm_units=tuple(config["lstm_units"]),
            dense_units=int(config["dense_units"]),
            num_classes=int(config["num_classes"]),
            dropout=float(config["dropout"]),
            rng=rng_for(0, _INIT_STREAM),
        )
        for name, p in model.params.items():
            if name not in arrays or arrays[name].shape != p.value.shape:
                raise ConfigError(f"checkpoint is missing block {name!r} or has a bad shape")
            p.value[...] = arrays[name]
        clf.feature_mean_ = arrays["feature_mean"]
        clf.feature_scale_ = arrays["feature_scale"]
        clf.classes_ = np.arange(int(config["num_classes"]))
        clf.model_ = model
        clf.history_ = []
        clf.best_epoch_ = None
        clf.stopped_epoch_ = None
        return clf
