"""Confusion matrices, weighted and unweighted accuracy, result tables.

Weighted accuracy (WA) is plain accuracy: correct / total. Unweighted
accuracy (UA) is the mean per-class recall, which weights every class
equally regardless of its frequency. On heavily imbalanced data WA can
look strong while minority classes are ignored, so result tables can
suppress the WA column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DegenerateDataError, ShapeError, UndefinedMetricError

__all__ = [
    "ResultRow",
    "confusion",
    "format_results_table",
    "recall_per_class",
    "results_to_json",
    "ua",
    "wa",
]


def confusion(labels: Sequence[int], predictions: Sequence[int], num_classes: int) -> np.ndarray:
    """Count matrix with true classes on rows, predictions on columns."""
    y = np.asarray(labels)
    p = np.asarray(predictions)
    if y.ndim != 1 or p.ndim != 1:
        raise ShapeError("labels and predictions must be 1-D")
    if y.shape[0] != p.shape[0]:
        raise ShapeError(f"{y.shape[0]} labels but {p.shape[0]} predictions")
    if num_classes < 2:
        raise ShapeError(f"num_classes must be >= 2, got {num_classes}")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    for yi, pi in zip(y, p):
        yi, pi = int(yi), int(pi)
        if not (0 <= yi < num_classes and 0 <= pi < num_classes):
            raise IndexError(
                f"class index out of range for {num_classes} classes: ({yi}, {pi})"
            )
        cm[yi, pi] += 1
    return cm


def _check_cm(cm: np.ndarray) -> np.ndarray:
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] < 2:
        raise ShapeError(f"confusion matrix must be square (K >= 2), got {cm.shape}")
    if cm.sum() == 0:
        raise DegenerateDataError("confusion matrix is empty")
    return cm


def wa(cm: np.ndarray) -> float:
    """Weighted accuracy: overall fraction of correct predictions."""
    cm = _check_cm(cm)
    return float(np.trace(cm) / cm.sum())


def recall_per_class(cm: np.ndarray) -> np.ndarray:
    """Diagonal over row sums; undefined when any class has no examples."""
    cm = _check_cm(cm)
    rows = cm.sum(axis=1)
    empty = np.flatnonzero(rows == 0)
    if empty.size:
        raise UndefinedMetricError(
            f"recall undefined for classes with no examples: {empty.tolist()}"
        )
    return np.diag(cm) / rows


def ua(cm: np.ndarray) -> float:
    """Unweighted accuracy: mean per-class recall."""
    return float(np.mean(recall_per_class(cm)))


@dataclass
class ResultRow:
    """One system's pooled confusion matrix, ready for tabulation."""

    system: str
    cm: np.ndarray

    @property
    def wa(self) -> float:
        return wa(self.cm)

    @property
    def ua(self) -> float:
        return ua(self.cm)

    @property
    def recalls(self) -> np.ndarray:
        return recall_per_class(self.cm)


def format_results_table(
    rows: Sequence[ResultRow],
    class_names: Sequence[str],
    show_wa: bool = True,
) -> str:
    """Aligned text table: one row per system, recalls then UA (and WA).

    ``show_wa=False`` drops the WA column for imbalanced reports where
    overall accuracy would be dominated by the majority class.
    """
    if not rows:
        raise DegenerateDataError("no result rows to format")
    names = list(class_names)
    for row in rows:
        if row.cm.shape[0] != len(names):
            raise ShapeError(
                f"system {row.system!r} has {row.cm.shape[0]} classes, "
                f"expected {len(names)}"
            )
    header = ["system"] + [f"recall[{n}]" for n in names] + ["UA"]
    if show_wa:
        header.append("WA")
    table = [header]
    for row in rows:
        cells = [row.system] + [f"{r:.4f}" for r in row.recalls] + [f"{row.ua:.4f}"]
        if show_wa:
            cells.append(f"{row.wa:.4f}")
        table.append(cells)
    widths = [max(len(line[c]) for line in table) for c in range(len(header))]
    lines = []
    for li, line in enumerate(table):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
        if li == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def results_to_json(
    rows: Sequence[ResultRow],
    class_names: Sequence[str],
    show_wa: bool = True,
) -> dict:
    """The same report as a JSON-serializable document."""
    if not rows:
        raise DegenerateDataError("no result rows to serialize")
    doc_rows = []
    for row in rows:
        entry = {
            "system": row.system,
            "confusion": row.cm.tolist(),
            "recall": [float(r) for r in row.recalls],
            "ua": float(row.ua),
        }
        if show_wa:
            entry["wa"] = float(row.wa)
        doc_rows.append(entry)
    return {"classes": list(class_names), "systems": doc_rows}
