"""Corpus model, manifest files, speaker-disjoint folds and balancing.

A corpus manifest is JSONL: a header line {"labels": [...]} fixing the
class name order, then one record per utterance with a unique id, a
speaker id, a label name, the transcript text, and optionally a
relative path to a frame-feature CSV.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .acoustic import load_feature_csv
from .exceptions import (
    ConfigError,
    CoverageError,
    DegenerateDataError,
    FormatError,
)
from .text import tokenize

__all__ = [
    "Corpus",
    "FoldPlan",
    "RoundSplit",
    "Utterance",
    "balance_classes",
    "load_corpus",
    "load_features",
    "make_folds",
    "save_corpus",
]


@dataclass(frozen=True)
class Utterance:
    """One utterance: identity, speaker, class, tokens, optional features."""

    uid: str
    speaker: str
    label: int
    tokens: tuple[str, ...]
    feature_path: str | None = None


@dataclass(frozen=True)
class Corpus:
    """An ordered collection of utterances with a fixed label-name list."""

    utterances: tuple[Utterance, ...]
    label_names: tuple[str, ...]
    root: Path | None = None
    _by_id: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.label_names) < 2:
            raise ConfigError("a corpus needs at least 2 label names")
        by_id: dict[str, Utterance] = {}
        for utt in self.utterances:
            if utt.uid in by_id:
                raise FormatError(f"duplicate utterance id {utt.uid!r}")
            if not 0 <= utt.label < len(self.label_names):
                raise FormatError(
                    f"utterance {utt.uid!r} has label {utt.label} outside "
                    f"the {len(self.label_names)} declared classes"
                )
            by_id[utt.uid] = utt
        self._by_id.update(by_id)

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self) -> Iterator[Utterance]:
        return iter(self.utterances)

    def __getitem__(self, uid: str) -> Utterance:
        try:
            return self._by_id[uid]
        except KeyError:
            raise CoverageError(f"unknown utterance id {uid!r}") from None

    @property
    def num_classes(self) -> int:
        return len(self.label_names)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(u.uid for u in self.utterances)

    @property
    def speakers(self) -> tuple[str, ...]:
        """Distinct speakers in first-appearance order."""
        return tuple(dict.fromkeys(u.speaker for u in self.utterances))

    def labels_for(self, ids: Sequence[str]) -> np.ndarray:
        return np.array([self[uid].label for uid in ids], dtype=np.int64)

    def tokens_for(self, ids: Sequence[str]) -> list[list[str]]:
        return [list(self[uid].tokens) for uid in ids]

    def class_counts(self) -> np.ndarray:
        counts = np.zeros(self.num_classes, dtype=np.int64)
        for u in self.utterances:
            counts[u.label] += 1
        return counts

    def subset(self, ids: Sequence[str]) -> "Corpus":
        """Sub-corpus with the given ids, keeping this corpus's order."""
        wanted = set(ids)
        missing = wanted - set(self._by_id)
        if missing:
            raise CoverageError(f"unknown utterance ids: {sorted(missing)[:5]}")
        kept = tuple(u for u in self.utterances if u.uid in wanted)
        return Corpus(utterances=kept, label_names=self.label_names, root=self.root)


def load_corpus(path: str | Path) -> Corpus:
    """Read a JSONL manifest. Feature paths stay relative to its folder."""
    path = Path(path)
    try:
        lines = [l for l in path.read_text(encoding="utf-8").splitlines() if l.strip()]
    except OSError as exc:
        raise FormatError(f"cannot read manifest {path}: {exc}") from exc
    if not lines:
        raise FormatError(f"{path}: empty manifest")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:1: invalid JSON: {exc}") from exc
    if not isinstance(header, dict) or "labels" not in header:
        raise FormatError(f'{path}: first line must be a {{"labels": [...]}} header')
    label_names = tuple(str(n) for n in header["labels"])
    label_index = {name: i for i, name in enumerate(label_names)}
    if len(label_index) != len(label_names):
        raise FormatError(f"{path}: duplicate label names in header")

    utterances: list[Utterance] = []
    for line_no, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
        if not isinstance(rec, dict):
            raise FormatError(f"{path}:{line_no}: record must be an object")
        missing = {"id", "speaker", "label", "text"} - rec.keys()
        if missing:
            raise FormatError(f"{path}:{line_no}: missing fields {sorted(missing)}")
        label_name = str(rec["label"])
        if label_name not in label_index:
            raise FormatError(f"{path}:{line_no}: unknown label {label_name!r}")
        utterances.append(
            Utterance(
                uid=str(rec["id"]),
                speaker=str(rec["speaker"]),
                label=label_index[label_name],
                tokens=tuple(tokenize(str(rec["text"]))),
                feature_path=str(rec["features"]) if rec.get("features") else None,
            )
        )
    return Corpus(utterances=tuple(utterances), label_names=label_names, root=path.parent)


def save_corpus(corpus: Corpus, path: str | Path, texts: Mapping[str, str] | None = None) -> None:
    """Write a manifest. ``texts`` supplies raw transcript strings per id;
    without it the stored tokens are joined with spaces."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps({"labels": list(corpus.label_names)}) + "\n")
        for u in corpus:
            text = texts[u.uid] if texts is not None else " ".join(u.tokens)
            rec = {
                "id": u.uid,
                "speaker": u.speaker,
                "label": corpus.label_names[u.label],
                "text": text,
            }
            if u.feature_path is not None:
                rec["features"] = u.feature_path
            handle.write(json.dumps(rec, sort_keys=True) + "\n")


def load_features(corpus: Corpus, ids: Sequence[str]) -> list[np.ndarray]:
    """Load the frame matrices for the given ids, in the given order."""
    out = []
    for uid in ids:
        utt = corpus[uid]
        if utt.feature_path is None:
            raise CoverageError(f"utterance {uid!r} has no feature file")
        base = corpus.root if corpus.root is not None else Path(".")
        out.append(load_feature_csv(base / utt.feature_path))
    return out


# ------------------------------------------------------------------ folding

@dataclass(frozen=True)
class RoundSplit:
    """Utterance-id partition for one cross-validation round."""

    round_index: int
    train_ids: tuple[str, ...]
    val_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


@dataclass(frozen=True)
class FoldPlan:
    """Speaker-disjoint folds over a corpus.

    Fold r is the test set of round r, fold (r + 1) mod k the
    validation set, and the remaining folds form the training set, so
    every utterance is tested exactly once across the k rounds.
    """

    fold_ids: tuple[tuple[str, ...], ...]
    fold_speakers: tuple[tuple[str, ...], ...]

    @property
    def k(self) -> int:
        return len(self.fold_ids)

    def round_split(self, round_index: int) -> RoundSplit:
        k = self.k
        if k < 3:
            raise ConfigError(
                f"train/validation/test rounds need k >= 3 folds, got {k}"
            )
        if not 0 <= round_index < k:
            raise ConfigError(f"round index {round_index} out of range for k={k}")
        test = round_index
        val = (round_index + 1) % k
        train_ids = tuple(
            uid
            for fi in range(k)
            if fi not in (test, val)
            for uid in self.fold_ids[fi]
        )
        return RoundSplit(
            round_index=round_index,
            train_ids=train_ids,
            val_ids=self.fold_ids[val],
            test_ids=self.fold_ids[test],
        )


def make_folds(corpus: Corpus, k: int, rng: np.random.Generator) -> FoldPlan:
    """Assign whole speakers to k folds, balancing utterance counts.

    Speakers are shuffled, then greedily placed (largest first) into
    the currently lightest fold, so no speaker ever spans two folds.
    """
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    speakers = list(corpus.speakers)
    if len(speakers) < k:
        raise DegenerateDataError(
            f"need at least k={k} distinct speakers, got {len(speakers)}"
        )
    counts: dict[str, int] = {s: 0 for s in speakers}
    for u in corpus:
        counts[u.speaker] += 1
    # Shuffle first so ties break randomly, then a stable sort by count.
    shuffled = list(np.array(speakers, dtype=object)[rng.permutation(len(speakers))])
    shuffled.sort(key=lambda s: -counts[s])
    fold_speakers: list[list[str]] = [[] for _ in range(k)]
    fold_sizes = [0] * k
    for s in shuffled:
        lightest = min(range(k), key=lambda fi: fold_sizes[fi])
        fold_speakers[lightest].append(s)
        fold_sizes[lightest] += counts[s]
    speaker_fold = {s: fi for fi, group in enumerate(fold_speakers) for s in group}
    fold_ids: list[list[str]] = [[] for _ in range(k)]
    for u in corpus:
        fold_ids[speaker_fold[u.speaker]].append(u.uid)
    return FoldPlan(
        fold_ids=tuple(tuple(ids) for ids in fold_ids),
        fold_speakers=tuple(tuple(sorted(group)) for group in fold_speakers),
    )


def balance_classes(corpus: Corpus, rng: np.random.Generator) -> Corpus:
    """Downsample every class to the size of the smallest one.

    Sampling is without replacement; the surviving utterances keep
    their original corpus order. A class with no utterances at all is
    an error.
    """
    counts = corpus.class_counts()
    if (counts == 0).any():
        empty = [corpus.label_names[i] for i in np.flatnonzero(counts == 0)]
        raise DegenerateDataError(f"cannot balance: classes with no utterances: {empty}")
    target = int(counts.min())
    kept: set[str] = set()
    for c in range(corpus.num_classes):
        ids = [u.uid for u in corpus if u.label == c]
        chosen = rng.choice(len(ids), size=target, replace=False)
        kept.update(ids[i] for i in chosen)
    return corpus.subset([uid for uid in corpus.ids if uid in kept])
