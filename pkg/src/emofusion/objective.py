"""Combined classification and verification objective over a mini-batch.

For a batch of M utterances the objective is

    C = sum_A sum_{B != A} [ H_A + lambda * V(A, B) ]
      = (M - 1) * sum_A H_A + lambda * sum_{ordered pairs} V(A, B)

where H_A is the softmax cross-entropy of utterance A and V is a binary
cross-entropy on the pair similarity p(A, B) = sigmoid(cos(d_A, d_B)),
with target 1 exactly when the two utterances share a class. The sum
runs over ordered pairs, so each unordered pair contributes twice. A
single-utterance batch degenerates to C = H_A with no pair term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ConfigError,
    DegenerateDataError,
    EmptySequenceError,
    NumericError,
    ShapeError,
)
from .nn.layers import softmax_cross_entropy

__all__ = [
    "BatchObjectiveResult",
    "PairBatch",
    "batch_objective",
    "cosine_gap",
    "pair_similarity",
    "verification_loss",
]

# Embeddings with a norm below this are treated as direction-free: the
# cosine is defined as 0, the pair similarity as 0.5, and no gradient
# flows through the pair term.
_NORM_FLOOR = 1e-12


def _cosine(a: np.ndarray, b: np.ndarray) -> tuple[float, float, float]:
    """Cosine plus both norms; falls back to 0 for near-zero vectors."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < _NORM_FLOOR or nb < _NORM_FLOOR:
        return 0.0, na, nb
    cos = float(np.dot(a, b) / (na * nb))
    return min(1.0, max(-1.0, cos)), na, nb


def pair_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Sigmoid of the cosine between two embeddings.

    Bounded to (sigmoid(-1), sigmoid(1)) by construction; orthogonal or
    direction-free inputs give exactly 0.5.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError(
            f"pair_similarity expects two 1-D vectors of equal length, "
            f"got shapes {a.shape} and {b.shape}"
        )
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NumericError("embeddings contain NaN or infinity")
    cos, _, _ = _cosine(a, b)
    return 1.0 / (1.0 + math.exp(-cos))


def verification_loss(a: np.ndarray, b: np.ndarray, same_class: bool) -> float:
    """Binary cross-entropy of the pair similarity against the pair label."""
    p = pair_similarity(a, b)
    if same_class:
        return -math.log(p)
    return -math.log(1.0 - p)


def _pair_gradients(
    a: np.ndarray, b: np.ndarray, same_class: bool
) -> tuple[float, np.ndarray, np.ndarray]:
    """V(a, b) with its gradients for one ordered pair.

    dV/dcos collapses to (p - t); the cosine gradients follow from the
    quotient rule. Direction-free embeddings get zero gradient.
    """
    cos, na, nb = _cosine(a, b)
    p = 1.0 / (1.0 + math.exp(-cos))
    t = 1.0 if same_class else 0.0
    loss = -math.log(p) if same_class else -math.log(1.0 - p)
    if na < _NORM_FLOOR or nb < _NORM_FLOOR:
        return loss, np.zeros_like(a), np.zeros_like(b)
    factor = p - t
    d_a = factor * (b / (na * nb) - cos * a / (na * na))
    d_b = factor * (a / (na * nb) - cos * b / (nb * nb))
    return loss, d_a, d_b


@dataclass
class PairBatch:
    """Utterance embeddings, logits and labels for one mini-batch."""

    embeddings: np.ndarray  # (M, P)
    logits: np.ndarray  # (M, K)
    labels: np.ndarray  # (M,) int
    verification_weight: float = 0.0

    def __post_init__(self) -> None:
        self.embeddings = np.asarray(self.embeddings, dtype=np.float64)
        self.logits = np.asarray(self.logits, dtype=np.float64)
        self.labels = np.asarray(self.labels)
        if self.embeddings.ndim != 2 or self.logits.ndim != 2:
            raise ShapeError("embeddings and logits must be 2-D (one row per utterance)")
        if self.embeddings.shape[0] == 0:
            raise EmptySequenceError("a pair batch needs at least one utterance")
        if self.labels.ndim != 1 or not np.issubdtype(self.labels.dtype, np.integer):
            raise ShapeError("labels must be a 1-D integer array")
        if not (
            self.embeddings.shape[0] == self.logits.shape[0] == self.labels.shape[0]
        ):
            raise ShapeError(
                f"row counts disagree: {self.embeddings.shape[0]} embeddings, "
                f"{self.logits.shape[0]} logit rows, {self.labels.shape[0]} labels"
            )
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.logits.shape[1]
        ):
            raise IndexError(
                f"labels out of range for {self.logits.shape[1]} classes"
            )
        if self.verification_weight < 0.0:
            raise ConfigError(
                f"verification_weight must be >= 0, got {self.verification_weight}"
            )

    @property
    def size(self) -> int:
        return self.embeddings.shape[0]


@dataclass
class BatchObjectiveResult:
    """Objective value and the gradients feeding the two model heads."""

    value: float
    normalized: float
    d_logits: np.ndarray  # (M, K)
    d_embeddings: np.ndarray  # (M, P)
    cross_entropies: np.ndarray  # (M,)
    verification_sum: float


def batch_objective(batch: PairBatch) -> BatchObjectiveResult:
    """Evaluate C over a batch and return its exact gradients.

    ``value`` is the literal double sum (unordered pairs counted twice);
    ``normalized`` divides by M * (M - 1) purely for comparable logging
    and equals ``value`` when M == 1.
    """
    m = batch.size
    lam = batch.verification_weight
    ce = np.empty(m)
    d_logits = np.empty_like(batch.logits)
    for i in range(m):
        loss_i, _, grad_i = softmax_cross_entropy(batch.logits[i], int(batch.labels[i]))
        ce[i] = loss_i
        d_logits[i] = grad_i

    d_embeddings = np.zeros_like(batch.embeddings)
    if m == 1:
        return BatchObjectiveResult(
            value=float(ce[0]),
            normalized=float(ce[0]),
            d_logits=d_logits,
            d_embeddings=d_embeddings,
            cross_entropies=ce,
            verification_sum=0.0,
        )

    pair_sum = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            same = bool(batch.labels[i] == batch.labels[j])
            loss_ij, d_i, d_j = _pair_gradients(
                batch.embeddings[i], batch.embeddings[j], same
            )
            # The ordered sum visits (i, j) and (j, i); V is symmetric,
            # so each unordered pair counts twice.
            pair_sum += 2.0 * loss_ij
            d_embeddings[i] += lam * 2.0 * d_i
            d_embeddings[j] += lam * 2.0 * d_j

    value = (m - 1) * float(ce.sum()) + lam * pair_sum
    d_logits *= m - 1
    return BatchObjectiveResult(
        value=value,
        normalized=value / (m * (m - 1)),
        d_logits=d_logits,
        d_embeddings=d_embeddings,
        cross_entropies=ce,
        verification_sum=pair_sum,
    )


def cosine_gap(embeddings: np.ndarray, labels: np.ndarray) -> tuple[float, float, float]:
    """Mean same-class cosine minus mean cross-class cosine.

    Averages run over unordered pairs. Returns (gap, intra_mean,
    inter_mean); a larger gap means classes are better separated in
    embedding space. Needs at least one pair of each kind.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if embeddings.ndim != 2 or labels.ndim != 1:
        raise ShapeError("cosine_gap expects (n, P) embeddings and 1-D labels")
    if embeddings.shape[0] != labels.shape[0]:
        raise ShapeError(
            f"row counts disagree: {embeddings.shape[0]} embeddings, "
            f"{labels.shape[0]} labels"
        )
    intra: list[float] = []
    inter: list[float] = []
    n = embeddings.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            cos, _, _ = _cosine(embeddings[i], embeddings[j])
            (intra if labels[i] == labels[j] else inter).append(cos)
    if not intra or not inter:
        raise DegenerateDataError(
            "cosine_gap needs at least one same-class and one cross-class pair"
        )
    intra_mean = float(np.mean(intra))
    inter_mean = float(np.mean(inter))
    return intra_mean - inter_mean, intra_mean, inter_mean
