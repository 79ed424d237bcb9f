"""Small shared helpers: array validation, seeded rng streams, stable JSON."""

from __future__ import annotations

import json
from typing import Any, Sequence

import numpy as np

from .exceptions import DegenerateDataError, NumericError, ShapeError

__all__ = [
    "as_float_array",
    "as_float_matrix",
    "as_float_vector",
    "as_label_array",
    "check_finite",
    "child_seed",
    "dump_json",
    "rng_for",
    "safe_mean_recall",
]


def as_float_array(x: Any, name: str = "array") -> np.ndarray:
    """Return ``x`` as a float64 ndarray, rejecting non-numeric input."""
    try:
        arr = np.asarray(x, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ShapeError(f"{name} is not numeric: {exc}") from exc
    return arr

def as_float_vector(x: Any, name: str = "vector") -> np.ndarray:
    arr = as_float_array(x, name)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr

def as_float_matrix(x: Any, name: str = "matrix") -> np.ndarray:
    arr = as_float_array(x, name)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr

def check_finite(arr: np.ndarray, name: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains NaN or infinity")
    return arr


def as_label_array(y: Any, num_classes: int | None = None) -> tuple[np.ndarray, int]:
    """Validate class labels and resolve the class count.

    Returns (labels, num_classes); the count defaults to max(y) + 1.
    """
    arr = np.asarray(y)
    if arr.ndim != 1 or arr.size == 0:
        raise ShapeError("y must be a non-empty 1-D array of class indices")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == arr.astype(np.int64)):
            raise ShapeError("y must contain integer class indices")
    arr = arr.astype(np.int64)
    if arr.min() < 0:
        raise ShapeError("class indices must be >= 0")
    k = int(num_classes) if num_classes is not None else int(arr.max()) + 1
    if arr.max() >= k:
        raise ShapeError(f"label {int(arr.max())} out of range for {k} classes")
    if k < 2:
        raise DegenerateDataError("need at least 2 classes")
    return arr, k


def safe_mean_recall(y_true: np.ndarray, y_pred: np.ndarray, num_classes: int) -> float:
    """Mean per-class recall over the classes that actually occur.

    Meant for in-training validation tracking, where a small split may
    legitimately miss a class; the metrics module stays strict instead.
    """
    recalls = []
    for c in range(num_classes):
        mask = y_true == c
        if mask.any():
            recalls.append(float(np.mean(y_pred[mask] == c)))
    if not recalls:
        raise DegenerateDataError("no labels to score")
    return float(np.mean(recalls))


def child_seed(seed: int, *path: int) -> int:
    """Derive a deterministic child seed for a named stream.

    Streams are identified by integer paths so independent stages
    (data synthesis, each training round, ...) never share state.
    """
    state = np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))
    return int(state.generate_state(1, dtype=np.uint64)[0])

def rng_for(seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream addressed by ``(seed, *path)``."""
    return np.random.default_rng(
        np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))
    )


def dump_json(obj: Any, *, indent: int | None = None) -> str:
    """Serialize with sorted keys so equal objects give equal bytes.

    Floats go through Python's shortest repr, which round-trips float64
    exactly, so reading a dump back reproduces bit-identical values.
    """
    return json.dumps(obj, sort_keys=True, indent=indent, allow_nan=False)


def ordered_unique(items: Sequence[str]) -> list[str]:
    """Unique items in first-seen order."""
    return list(dict.fromkeys(items))
