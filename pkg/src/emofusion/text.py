"""Tokenization, vocabulary indexing and kernel-size schedules."""

from __future__ import annotations

import re
from typing import Iterable, Sequence

from .exceptions import ConfigError

__all__ = [
    "PAD_INDEX",
    "OOV_INDEX",
    "Vocabulary",
    "as_documents",
    "kernel_schedule",
    "pad_token_indices",
    "tokenize",
]

PAD_INDEX = 0
OOV_INDEX = 1

_PAD_TOKEN = "<pad>"
_OOV_TOKEN = "<oov>"

# Anything outside lowercase letters, digits and apostrophes separates tokens.
_SEPARATORS = re.compile(r"[^a-z0-9']+")


def tokenize(raw: str) -> list[str]:
    """Lowercase, strip special characters, split on whitespace.

    Apostrophes stay inside tokens so contractions survive ("don't").
    An empty or punctuation-only string yields an empty list.
    """
    return [t for t in _SEPARATORS.split(raw.lower()) if t]


def as_documents(x) -> list[list[str]]:
    """Coerce a batch of utterances to token lists.

    Raw strings are tokenized; anything else is taken as an already
    tokenized sequence.
    """
    docs: list[list[str]] = []
    for item in x:
        if isinstance(item, str):
            docs.append(tokenize(item))
        else:
            docs.append([str(t) for t in item])
    return docs


class Vocabulary:
    """Token-to-index mapping with reserved padding and OOV slots.

    Index 0 is padding, index 1 is out-of-vocabulary; real tokens start
    at index 2 in sorted order, so the mapping is a pure function of the
    training token set. The reserved surface forms contain angle
    brackets, which the tokenizer strips, so they can never collide
    with a real token.
    """

    def __init__(self, tokens: Iterable[str] = ()) -> None:
        ordered = [_PAD_TOKEN, _OOV_TOKEN] + sorted(set(tokens) - {_PAD_TOKEN, _OOV_TOKEN})
        self._tokens: list[str] = ordered
        self._index: dict[str, int] = {t: i for i, t in enumerate(ordered)}

    @classmethod
    def from_documents(cls, documents: Iterable[Sequence[str]]) -> "Vocabulary":
        return cls(token for doc in documents for token in doc)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self._tokens == other._tokens

    def index_of(self, token: str) -> int:
        """Index of a token; unknown tokens map to the OOV slot."""
        return self._index.get(token, OOV_INDEX)

    def token_of(self, index: int) -> str:
        return self._tokens[index]

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self._index.get(t, OOV_INDEX) for t in tokens]

    def to_list(self) -> list[str]:
        """Full token list including the reserved slots, for checkpoints."""
        return list(self._tokens)

    @classmethod
    def from_list(cls, tokens: Sequence[str]) -> "Vocabulary":
        if len(tokens) < 2 or tokens[0] != _PAD_TOKEN or tokens[1] != _OOV_TOKEN:
            raise ConfigError("vocabulary list must start with the pad and OOV tokens")
        vocab = cls()
        vocab._tokens = list(tokens)
        vocab._index = {t: i for i, t in enumerate(vocab._tokens)}
        return vocab


def kernel_schedule(spec: str | Sequence[int]) -> tuple[int, ...]:
    """Resolve the per-module convolution widths.

    Accepts a preset name ("iemocap" -> 1, 4, 7, 11; "callcenter" ->
    1, 2, 3) or an explicit strictly increasing sequence of positive
    widths. Width 1 means single-word features; wider modules span
    progressively longer phrases.
    """
    if isinstance(spec, str):
        presets = {"iemocap": (1, 4, 7, 11), "callcenter": (1, 2, 3)}
        if spec not in presets:
            raise ConfigError(
                f"unknown kernel preset {spec!r}; use one of {sorted(presets)}"
            )
        return presets[spec]
    sizes = tuple(int(k) for k in spec)
    if not sizes:
        raise ConfigError("kernel schedule must contain at least one width")
    if sizes[0] < 1:
        raise ConfigError(f"kernel widths must be positive, got {sizes}")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError(f"kernel widths must be strictly increasing, got {sizes}")
    return sizes


def pad_token_indices(indices: Sequence[int], min_length: int) -> list[int]:
    """Right-pad an index sequence with the padding index."""
    if min_length < 0:
        raise ConfigError(f"min_length must be >= 0, got {min_length}")
    padded = list(indices)
    if len(padded) < min_length:
        padded.extend([PAD_INDEX] * (min_length - len(padded)))
    return padded
