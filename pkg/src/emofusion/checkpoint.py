"""Byte-stable model checkpoints: JSON with base64-encoded float64 blocks.

A checkpoint is a single sorted-keys JSON document, so saving the same
model twice produces identical bytes (no timestamps, no zip metadata).
"""

from __future__ import annotations

import base64
import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .exceptions import FormatError

__all__ = ["load_checkpoint", "save_checkpoint"]

_MAGIC = "emofusion-checkpoint"
_VERSION = 1


def _encode_array(arr: np.ndarray) -> dict[str, Any]:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def _decode_array(block: Any, name: str) -> np.ndarray:
    if not isinstance(block, dict) or "shape" not in block or "data" not in block:
        raise FormatError(f"array block {name!r} is malformed")
    try:
        raw = base64.b64decode(block["data"], validate=True)
        arr = np.frombuffer(raw, dtype=np.float64).copy()
        return arr.reshape([int(s) for s in block["shape"]])
    except (ValueError, TypeError) as exc:
        raise FormatError(f"array block {name!r} cannot be decoded: {exc}") from exc


def save_checkpoint(
    path: str | Path,
    kind: str,
    config: Mapping[str, Any],
    arrays: Mapping[str, np.ndarray],
    extra: Mapping[str, Any] | None = None,
) -> None:
    """Write a model checkpoint.

    ``config`` and ``extra`` must be JSON-serializable; ``arrays`` maps
    block names to float64 ndarrays.
    """
    doc = {
        "format": _MAGIC,
        "version": _VERSION,
        "kind": kind,
        "config": dict(config),
        "extra": dict(extra) if extra else {},
        "arrays": {name: _encode_array(arr) for name, arr in arrays.items()},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(
    path: str | Path, expected_kind: str | None = None
) -> tuple[str, dict[str, Any], dict[str, np.ndarray], dict[str, Any]]:
    """Read a checkpoint back. Returns (kind, config, arrays, extra)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != _MAGIC:
        raise FormatError(f"{path} is not an emofusion checkpoint")
    if doc.get("version") != _VERSION:
        raise FormatError(f"unsupported checkpoint version {doc.get('version')!r}")
    kind = doc.get("kind")
    if not isinstance(kind, str):
        raise FormatError("checkpoint kind is missing")
    if expected_kind is not None and kind != expected_kind:
        raise FormatError(f"expected a {expected_kind!r} checkpoint, found {kind!r}")
    arrays_doc = doc.get("arrays")
    if not isinstance(arrays_doc, dict):
        raise FormatError("checkpoint arrays section is missing")
    arrays = {name: _decode_array(block, name) for name, block in arrays_doc.items()}
    return kind, dict(doc.get("config", {})), arrays, dict(doc.get("extra", {}))
