"""Forward and backward passes for the elementary layers.

All functions are pure: forward passes return the output (plus whatever
cache the backward pass needs), backward passes return gradient arrays.
Parameter accumulation is the caller's job.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import (
    ConfigError,
    EmptySequenceError,
    NumericError,
    PreconditionError,
    ShapeError,
)

__all__ = [
    "conv1d_backward",
    "conv1d_forward",
    "dense_backward",
    "dense_forward",
    "dropout_backward",
    "dropout_forward",
    "embedding_backward",
    "embedding_forward",
    "mean_pool_backward",
    "mean_pool_forward",
    "relu_backward",
    "relu_forward",
    "softmax",
    "softmax_cross_entropy",
]


# ---------------------------------------------------------------- convolution

def conv1d_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid 1-D convolution over the time axis.

    x: (T, E), weights: (k, E, F), bias: (F,) -> (T - k + 1, F) with
    out[t, f] = bias[f] + sum_{i, e} x[t + i, e] * weights[i, e, f].
    """
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"conv1d input must be 2-D, got shape {x.shape}")
    if weights.ndim != 3:
        raise ShapeError(f"conv1d weights must be 3-D, got shape {weights.shape}")
    k, e_w, f = weights.shape
    if bias.shape != (f,):
        raise ShapeError(f"conv1d bias must have shape ({f},), got {bias.shape}")
    if x.shape[1] != e_w:
        raise ShapeError(
            f"conv1d input width {x.shape[1]} != weight width {e_w}"
        )
    if x.shape[0] < k:
        raise PreconditionError(
            f"conv1d needs at least k={k} steps, got {x.shape[0]}"
        )
    # (L, E, k) windows; contract the kernel and embedding axes.
    windows = sliding_window_view(x, k, axis=0)
    return np.einsum("lek,kef->lf", windows, weights) + bias


def conv1d_backward(
    x: np.ndarray, weights: np.ndarray, d_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of conv1d_forward. Returns (d_x, d_weights, d_bias)."""
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    d_out = np.asarray(d_out, dtype=np.float64)
    k = weights.shape[0]
    length = x.shape[0] - k + 1
    if d_out.shape != (length, weights.shape[2]):
        raise ShapeError(
            f"conv1d upstream gradient must have shape ({length}, {weights.shape[2]}), "
            f"got {d_out.shape}"
        )
    windows = sliding_window_view(x, k, axis=0)
    d_w = np.einsum("lek,lf->kef", windows, d_out)
    d_b = d_out.sum(axis=0)
    d_x = np.zeros_like(x)
    for i in range(k):
        d_x[i : i + length] += d_out @ weights[i].T
    return d_x, d_w, d_b


# ------------------------------------------------------------------- pooling

def mean_pool_forward(x: np.ndarray) -> np.ndarray:
    """Mean over the time axis via a running (Welford) update.

    The incremental form m += (x[t] - m) / (t + 1) is exactly invariant
    on constant input: pooling T copies of one row returns that row
    bit for bit, which a sum-then-divide mean does not guarantee.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"mean_pool input must be 2-D, got shape {x.shape}")
    if x.shape[0] == 0:
        raise EmptySequenceError("mean_pool needs at least one time step")
    mean = np.zeros(x.shape[1], dtype=np.float64)
    for t in range(x.shape[0]):
        mean += (x[t] - mean) / (t + 1)
    return mean


def mean_pool_backward(d_out: np.ndarray, length: int) -> np.ndarray:
    """Spread the pooled gradient evenly over the time steps."""
    d_out = np.asarray(d_out, dtype=np.float64)
    if length < 1:
        raise EmptySequenceError("mean_pool_backward needs length >= 1")
    return np.tile(d_out / length, (length, 1))


# -------------------------------------------------------------- dense + relu

_ACTIVATIONS = ("linear", "relu", "tanh")


def dense_forward(
    x: np.ndarray, weights: np.ndarray, bias: np.ndarray, activation: str = "linear"
) -> tuple[np.ndarray, np.ndarray]:
    """Fully connected layer: act(weights @ x + bias).

    x: (n,), weights: (m, n), bias: (m,). Returns (out, pre_activation);
    the pre-activation is the backward cache.
    """
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    if activation not in _ACTIVATIONS:
        raise ConfigError(f"unknown activation {activation!r}; use one of {_ACTIVATIONS}")
    if x.ndim != 1 or weights.ndim != 2 or bias.ndim != 1:
        raise ShapeError(
            f"dense expects 1-D input, 2-D weights, 1-D bias; got "
            f"{x.shape}, {weights.shape}, {bias.shape}"
        )
    if weights.shape[1] != x.shape[0] or weights.shape[0] != bias.shape[0]:
        raise ShapeError(
            f"dense shapes disagree: weights {weights.shape}, input {x.shape}, "
            f"bias {bias.shape}"
        )
    z = weights @ x + bias
    if activation == "relu":
        out = np.maximum(z, 0.0)
    elif activation == "tanh":
        out = np.tanh(z)
    else:
        out = z.copy()
    return out, z


def dense_backward(
    x: np.ndarray,
    weights: np.ndarray,
    pre_activation: np.ndarray,
    d_out: np.ndarray,
    activation: str = "linear",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of dense_forward. Returns (d_x, d_weights, d_bias)."""
    x = np.asarray(x, dtype=np.float64)
    d_out = np.asarray(d_out, dtype=np.float64)
    if activation == "relu":
        d_z = d_out * (pre_activation > 0.0)
    elif activation == "tanh":
        d_z = d_out * (1.0 - np.tanh(pre_activation) ** 2)
    elif activation == "linear":
        d_z = d_out
    else:
        raise ConfigError(f"unknown activation {activation!r}; use one of {_ACTIVATIONS}")
    d_w = np.outer(d_z, x)
    d_b = d_z.copy()
    d_x = weights.T @ d_z
    return d_x, d_w, d_b


def relu_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise max(x, 0). Returns (out, input cache)."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0), x


def relu_backward(d_out: np.ndarray, cache: np.ndarray) -> np.ndarray:
    return np.asarray(d_out, dtype=np.float64) * (cache > 0.0)


# ------------------------------------------------------------------- dropout

def dropout_forward(
    x: np.ndarray,
    drop_prob: float,
    mode: str,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverted dropout. Returns (out, mask); mask is None in eval mode.

    Train mode zeroes each entry with probability drop_prob and scales
    survivors by 1 / (1 - drop_prob), so eval mode is the identity.
    """
    x = np.asarray(x, dtype=np.float64)
    if mode not in ("train", "eval"):
        raise ConfigError(f"dropout mode must be 'train' or 'eval', got {mode!r}")
    if not 0.0 <= drop_prob < 1.0:
        raise ConfigError(f"drop_prob must lie in [0, 1), got {drop_prob}")
    if mode == "eval":
        return x.copy(), None
    if rng is None:
        raise ConfigError("train-mode dropout needs an rng")
    keep = rng.random(x.shape) >= drop_prob
    mask = keep / (1.0 - drop_prob)
    return x * mask, mask


def dropout_backward(d_out: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    """Route the gradient through the same scaled mask."""
    d_out = np.asarray(d_out, dtype=np.float64)
    if mask is None:
        return d_out.copy()
    return d_out * mask


# ----------------------------------------------------------------- embedding

def embedding_forward(table: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Row lookup: table (V, E), indices (T,) -> (T, E)."""
    table = np.asarray(table, dtype=np.float64)
    indices = np.asarray(indices)
    if table.ndim != 2:
        raise ShapeError(f"embedding table must be 2-D, got shape {table.shape}")
    if indices.ndim != 1:
        raise ShapeError(f"embedding indices must be 1-D, got shape {indices.shape}")
    if not np.issubdtype(indices.dtype, np.integer):
        raise ShapeError(f"embedding indices must be integers, got dtype {indices.dtype}")
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise IndexError(
            f"embedding index out of range for table with {table.shape[0]} rows"
        )
    return table[indices]


def embedding_backward(d_out: np.ndarray, indices: np.ndarray, vocab_size: int) -> np.ndarray:
    """Scatter-add the upstream gradient back onto the table rows."""
    d_out = np.asarray(d_out, dtype=np.float64)
    indices = np.asarray(indices)
    d_table = np.zeros((vocab_size, d_out.shape[1]), dtype=np.float64)
    np.add.at(d_table, indices, d_out)
    return d_table


# --------------------------------------------------------- softmax + CE loss

def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over a 1-D logit vector."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise ShapeError(f"softmax expects a 1-D vector, got shape {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise NumericError("softmax logits contain NaN or infinity")
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def softmax_cross_entropy(
    logits: np.ndarray, true_class: int
) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-entropy of softmax(logits) against a single true class.

    Returns (loss, probabilities, d_logits) with
    d_logits = probabilities - one_hot(true_class). The loss uses a
    log-sum-exp form so it stays finite for any finite logits.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise ShapeError(f"logits must be 1-D, got shape {logits.shape}")
    if logits.shape[0] < 2:
        raise PreconditionError("cross-entropy needs at least 2 classes")
    if not np.all(np.isfinite(logits)):
        raise NumericError("logits contain NaN or infinity")
    true_class = int(true_class)
    if not 0 <= true_class < logits.shape[0]:
        raise IndexError(
            f"true_class {true_class} out of range for {logits.shape[0]} classes"
        )
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    total = exp.sum()
    probs = exp / total
    loss = float(np.log(total) - shifted[true_class])
    d_logits = probs.copy()
    d_logits[true_class] -= 1.0
    return loss, probs, d_logits
