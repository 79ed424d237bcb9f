"""Multi-resolution convolutional text model and its estimator wrapper.

The model embeds word indices, runs several parallel 1-D convolutions
with distinct widths (one "module" per width), relu-activates each,
mean-pools every module over its valid windows and concatenates the
pooled blocks into the utterance embedding. A linear layer plus softmax
turns the embedding into class posteriors.

Only windows that lie fully inside the real tokens count: module k sees
max(0, real_len - k + 1) windows, a module wider than the utterance
contributes a zero block, and an utterance with no tokens at all maps
to a zero embedding with uniform posteriors (and takes no gradient).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .checkpoint import load_checkpoint, save_checkpoint
from .exceptions import ConfigError, DegenerateDataError, ShapeError
from .nn.layers import (
    conv1d_backward,
    conv1d_forward,
    dense_backward,
    dense_forward,
    embedding_backward,
    embedding_forward,
    mean_pool_backward,
    mean_pool_forward,
    relu_backward,
    relu_forward,
    softmax,
)
from .nn.params import Parameter, adam_update, uniform_init
from .objective import PairBatch, batch_objective
from .text import Vocabulary, as_documents, kernel_schedule
from .utils import as_label_array, rng_for, safe_mean_recall

__all__ = ["McnnClassifier", "McnnConfig", "McnnModel", "mcnn_preset"]

_INIT_STREAM = 0
_SHUFFLE_STREAM = 1


def mcnn_preset(name: str) -> dict:
    """Constructor arguments for the two reference setups.

    "iemocap": four modules of widths 1, 4, 7 and 11 over four emotion
    classes. "callcenter": three modules of widths 1, 2 and 3 over
    three classes, with the verification term at weight 0.15.
    """
    presets = {
        "iemocap": {
            "kernel_sizes": "iemocap",
            "num_classes": 4,
            "batch_size": 40,
            "verification_weight": 0.0,
        },
        "callcenter": {
            "kernel_sizes": "callcenter",
            "num_classes": 3,
            "batch_size": 40,
            "verification_weight": 0.15,
        },
    }
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; use one of {sorted(presets)}")
    return dict(presets[name])


@dataclass(frozen=True)
class McnnConfig:
    """Architecture of the text model."""

    kernel_sizes: tuple[int, ...]
    embed_dim: int = 50
    filters_per_module: int = 64
    num_classes: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "kernel_sizes", kernel_schedule(self.kernel_sizes))
        if self.embed_dim < 1:
            raise ConfigError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if self.filters_per_module < 1:
            raise ConfigError(
                f"filters_per_module must be >= 1, got {self.filters_per_module}"
            )
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")

    @property
    def num_modules(self) -> int:
        return len(self.kernel_sizes)

    @property
    def embedding_size(self) -> int:
        """Length of the concatenated utterance embedding."""
        return self.num_modules * self.filters_per_module

    def to_dict(self) -> dict:
        return {
            "kernel_sizes": list(self.kernel_sizes),
            "embed_dim": self.embed_dim,
            "filters_per_module": self.filters_per_module,
            "num_classes": self.num_classes,
        }


@dataclass
class McnnForward:
    """One utterance's forward products."""

    embedding: np.ndarray  # (num_modules * filters,)
    logits: np.ndarray  # (K,)
    posteriors: np.ndarray  # (K,)
    cache: tuple | None  # None for an empty utterance


class McnnModel:
    """Parameter container plus forward/backward for the architecture."""

    def __init__(self, config: McnnConfig, vocab_size: int, rng: np.random.Generator) -> None:
        if vocab_size < 2:
            raise ConfigError(f"vocab_size must be >= 2, got {vocab_size}")
        self.config = config
        self.vocab_size = int(vocab_size)
        e, f = config.embed_dim, config.filters_per_module
        self.params: dict[str, Parameter] = {
            "embedding": Parameter(uniform_init(rng, (vocab_size, e)))
        }
        for mi, k in enumerate(config.kernel_sizes):
            self.params[f"conv{mi}_w"] = Parameter(uniform_init(rng, (k, e, f)))
            self.params[f"conv{mi}_b"] = Parameter(np.zeros(f))
        self.params["out_w"] = Parameter(
            uniform_init(rng, (config.num_classes, config.embedding_size))
        )
        self.params["out_b"] = Parameter(np.zeros(config.num_classes))

    def forward(self, indices: Sequence[int]) -> McnnForward:
        """Forward one utterance given its (unpadded) token indices."""
        cfg = self.config
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ShapeError(f"token indices must be 1-D, got shape {idx.shape}")
        real_len = idx.shape[0]
        if real_len == 0:
            k = cfg.num_classes
            return McnnForward(
                embedding=np.zeros(cfg.embedding_size),
                logits=np.zeros(k),
                posteriors=np.full(k, 1.0 / k),
                cache=None,
            )
        x = embedding_forward(self.params["embedding"].value, idx)
        blocks: list[np.ndarray] = []
        module_caches: list[tuple | None] = []
        for mi, k in enumerate(cfg.kernel_sizes):
            valid = real_len - k + 1
            if valid < 1:
                blocks.append(np.zeros(cfg.filters_per_module))
                module_caches.append(None)
                continue
            z = conv1d_forward(
                x, self.params[f"conv{mi}_w"].value, self.params[f"conv{mi}_b"].value
            )
            r, _ = relu_forward(z)
            blocks.append(mean_pool_forward(r))
            module_caches.append((z, valid))
        embedding = np.concatenate(blocks)
        logits, z_out = dense_forward(
            embedding, self.params["out_w"].value, self.params["out_b"].value, "linear"
        )
        cache = (idx, x, module_caches, embedding, z_out)
        return McnnForward(
            embedding=embedding,
            logits=logits,
            posteriors=softmax(logits),
            cache=cache,
        )

    def backward(
        self,
        cache: tuple | None,
        d_logits: np.ndarray,
        d_embedding: np.ndarray | None = None,
    ) -> None:
        """Accumulate gradients for one utterance into the parameters.

        ``d_embedding`` carries the pair-term gradient on the utterance
        embedding; pass None when only the classification head is
        active. A None cache (empty utterance) is a no-op.
        """
        if cache is None:
            return
        cfg = self.config
        idx, x, module_caches, embedding, z_out = cache
        d_vec, d_out_w, d_out_b = dense_backward(
            embedding, self.params["out_w"].value, z_out, d_logits, "linear"
        )
        self.params["out_w"].grad += d_out_w
        self.params["out_b"].grad += d_out_b
        if d_embedding is not None:
            d_vec = d_vec + d_embedding
        d_x = np.zeros_like(x)
        f = cfg.filters_per_module
        for mi, k in enumerate(cfg.kernel_sizes):
            mc = module_caches[mi]
            if mc is None:
                continue
            z, valid = mc
            d_block = d_vec[mi * f : (mi + 1) * f]
            d_r = mean_pool_backward(d_block, valid)
            d_z = relu_backward(d_r, z)
            d_x_mod, d_w, d_b = conv1d_backward(
                x, self.params[f"conv{mi}_w"].value, d_z
            )
            self.params[f"conv{mi}_w"].grad += d_w
            self.params[f"conv{mi}_b"].grad += d_b
            d_x += d_x_mod
        d_table = embedding_backward(d_x, idx, self.vocab_size)
        d_table[0] = 0.0  # the padding row never trains
        self.params["embedding"].grad += d_table

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self.params.items()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        for name, value in snapshot.items():
            self.params[name].value[...] = value


class McnnClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Multi-resolution text CNN with the combined objective.

    ``verification_weight`` is the weight on the pairwise verification
    term inside each mini-batch; 0 recovers plain cross-entropy
    training. ``transform`` exposes the utterance embeddings, and
    ``predict_proba`` the class posteriors.

    When ``fit`` gets a ``validation=(X_val, y_val)`` pair, the epoch
    with the best validation mean recall is kept; otherwise the final
    epoch's weights are. ``early_stop_train_ua`` stops training as soon
    as the training-set mean recall exceeds the given threshold.
    """

    def __init__(
        self,
        kernel_sizes: str | Sequence[int] = "iemocap",
        embed_dim: int = 50,
        filters_per_module: int = 64,
        num_classes: int | None = None,
        verification_weight: float = 0.0,
        learning_rate: float = 0.001,
        batch_size: int = 40,
        n_epochs: int = 30,
        seed: int = 0,
        early_stop_train_ua: float | None = None,
    ) -> None:
        self.kernel_sizes = kernel_sizes
        self.embed_dim = embed_dim
        self.filters_per_module = filters_per_module
        self.num_classes = num_classes
        self.verification_weight = verification_weight
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.n_epochs = n_epochs
        self.seed = seed
        self.early_stop_train_ua = early_stop_train_ua

    # ------------------------------------------------------------- fitting

    def fit(self, X: Sequence, y: Sequence, validation: tuple | None = None):
        docs = as_documents(X)
        labels, k = as_label_array(y, self.num_classes)
        if len(docs) != labels.shape[0]:
            raise ShapeError(
                f"{len(docs)} documents but {labels.shape[0]} labels"
            )
        if float(self.verification_weight) < 0.0:
            raise ConfigError(
                f"verification_weight must be >= 0, got {self.verification_weight}"
            )
        if self.batch_size < 1 or self.n_epochs < 1:
            raise ConfigError("batch_size and n_epochs must be >= 1")
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")

        config = McnnConfig(
            kernel_sizes=self.kernel_sizes,
            embed_dim=self.embed_dim,
            filters_per_module=self.filters_per_module,
            num_classes=k,
        )
        vocab = Vocabulary.from_documents(docs)
        model = McnnModel(config, len(vocab), rng_for(self.seed, _INIT_STREAM))
        encoded = [np.asarray(vocab.encode(d), dtype=np.int64) for d in docs]

        val_docs: list[np.ndarray] | None = None
        val_labels: np.ndarray | None = None
        if validation is not None:
            vx, vy = validation
            val_docs = [
                np.asarray(vocab.encode(d), dtype=np.int64) for d in as_documents(vx)
            ]
            val_labels, _ = as_label_array(vy, k)

        shuffle_rng = rng_for(self.seed, _SHUFFLE_STREAM)
        history: list[dict] = []
        best_snapshot: dict[str, np.ndarray] | None = None
        best_val = -1.0
        best_epoch = -1
        stopped_epoch: int | None = None

        n = len(encoded)
        for epoch in range(self.n_epochs):
            order = shuffle_rng.permutation(n)
            batch_values: list[float] = []
            batch_norms: list[float] = []
            for start in range(0, n, self.batch_size):
                chosen = order[start : start + self.batch_size]
                outs = [model.forward(encoded[i]) for i in chosen]
                batch = PairBatch(
                    embeddings=np.stack([o.embedding for o in outs]),
                    logits=np.stack([o.logits for o in outs]),
                    labels=labels[chosen],
                    verification_weight=float(self.verification_weight),
                )
                res = batch_objective(batch)
                for pos, o in enumerate(outs):
                    model.backward(o.cache, res.d_logits[pos], res.d_embeddings[pos])
                for p in model.params.values():
                    adam_update(p, learning_rate=float(self.learning_rate))
                batch_values.append(res.value)
                batch_norms.append(res.normalized)

            record: dict = {
                "epoch": epoch,
                "train_loss": float(np.mean(batch_values)),
                "train_loss_normalized": float(np.mean(batch_norms)),
            }
            if val_docs is not None and val_labels is not None:
                preds = np.array(
                    [int(np.argmax(model.forward(d).posteriors)) for d in val_docs]
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
                    [int(np.argmax(model.forward(d).posteriors)) for d in encoded]
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
        self.config_ = config
        self.vocab_ = vocab
        self.model_ = model
        self.history_ = history
        self.best_epoch_ = best_epoch if best_snapshot is not None else None
        self.stopped_epoch_ = stopped_epoch
        return self

    # ----------------------------------------------------------- inference

    def _encode(self, X: Sequence) -> list[np.ndarray]:
        check_is_fitted(self, "model_")
        return [
            np.asarray(self.vocab_.encode(d), dtype=np.int64) for d in as_documents(X)
        ]

    def predict_proba(self, X: Sequence) -> np.ndarray:
        return np.stack([self.model_.forward(d).posteriors for d in self._encode(X)])

    def predict(self, X: Sequence) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def transform(self, X: Sequence) -> np.ndarray:
        """Utterance embeddings, one row per document."""
        return np.stack([self.model_.forward(d).embedding for d in self._encode(X)])

    # --------------------------------------------------------- persistence

    def save(self, path: str | Path) -> None:
        check_is_fitted(self, "model_")
        arrays = {name: p.value for name, p in self.model_.params.items()}
        save_checkpoint(
            path,
            kind="mcnn",
            config=self.config_.to_dict(),
            arrays=arrays,
            extra={
                "vocab": self.vocab_.to_list(),
                "params": {
                    "verification_weight": float(self.verification_weight),
                    "learning_rate": float(self.learning_rate),
                    "batch_size": int(self.batch_size),
                    "n_epochs": int(self.n_epochs),
                    "seed": int(self.seed),
                },
            },
        )

    @classmethod
    def load(cls, path: str | Path) -> "McnnClassifier":
        _, config_doc, arrays, extra = load_checkpoint(path, expected_kind="mcnn")
        config = McnnConfig(
            kernel_sizes=tuple(config_doc["kernel_sizes"]),
            embed_dim=int(config_doc["embed_dim"]),
            filters_per_module=int(config_doc["filters_per_module"]),
            num_classes=int(config_doc["num_classes"]),
        )
        vocab = Vocabulary.from_list(extra["vocab"])
        stored = extra.get("params", {})
        clf = cls(
            kernel_sizes=config.kernel_sizes,
            embed_dim=config.embed_dim,
            filters_per_module=config.filters_per_module,
            num_classes=config.num_classes,
            verification_weight=stored.get("verification_weight", 0.0),
            learning_rate=stored.get("learning_rate", 0.001),
            batch_size=stored.get("batch_size", 40),
            n_epochs=stored.get("n_epochs", 30),
            seed=stored.get("seed", 0),
        )
        model = McnnModel(config, len(vocab), rng_for(0, _INIT_STREAM))
        for name, p in model.params.items():
            if name not in arrays or arrays[name].shape != p.value.shape:
                raise ConfigError(f"checkpoint is missing block {name!r} or has a bad shape")
            p.value[...] = arrays[name]
        clf.classes_ = np.arange(config.num_classes)
        clf.config_ = config
        clf.vocab_ = vocab
        clf.model_ = model
        clf.history_ = []
        clf.best_epoch_ = None
        clf.stopped_epoch_ = None
        return clf
