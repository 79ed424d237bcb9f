"""Score files and late fusion of per-system scores with a linear SVM.

Every system (text model, acoustic model, e-vector) emits one score
vector per utterance and cross-validation round. Fusion concatenates
the chosen systems' vectors per utterance and trains a fresh SVM per
round on the training fold, so the SVM never sees a single test row
and the underlying scores for test utterances come from models that
never trained on them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import Corpus, FoldPlan
from .exceptions import (
    ConfigError,
    CoverageError,
    FormatError,
    ShapeError,
    UndefinedMetricError,
)
from .metrics import ResultRow, confusion, ua, wa
from .svm import LinearSvmClassifier
from .utils import child_seed

__all__ = [
    "FusionReport",
    "ScoreSet",
    "concat_scores",
    "read_score_file",
    "run_fusion_experiment",
    "write_score_file",
]

_SVM_STREAM = 5


@dataclass
class ScoreSet:
    """One system's score vectors for one round, keyed by utterance id."""

    system: str
    scores: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if not self.system:
            raise ConfigError("a score set needs a system name")
        if not self.scores:
            raise FormatError(f"score set {self.system!r} is empty")
        dim = None
        for uid, vec in self.scores.items():
            vec = np.asarray(vec, dtype=np.float64)
            if vec.ndim != 1 or vec.size == 0:
                raise ShapeError(
                    f"score for {uid!r} must be a non-empty vector, got shape {vec.shape}"
                )
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise ShapeError(
                    f"score for {uid!r} has length {vec.size}, expected {dim}"
                )
            self.scores[uid] = vec
        self.dim = int(dim)

    def vector_for(self, uid: str) -> np.ndarray:
        vec = self.scores.get(uid)
        if vec is None:
            raise CoverageError(f"system {self.system!r} has no score for id {uid!r}")
        return vec


def concat_scores(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Concatenate one utterance's score vectors in system order."""
    if not blocks:
        raise ConfigError("concat_scores needs at least one block")
    arrs = []
    for pos, b in enumerate(blocks):
        arr = np.asarray(b, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ShapeError(
                f"score block {pos} must be a non-empty vector, got shape {arr.shape}"
            )
        arrs.append(arr)
    return np.concatenate(arrs)


def write_score_file(path: str | Path, score_set: ScoreSet) -> None:
    """JSONL: a {"system", "dim"} header then one {"id", "scores"} row
    per utterance in insertion order, with exact float reprs."""
    with open(path, "w", encoding="utf-8") as handle:
        header = {"system": score_set.system, "dim": score_set.dim}
        handle.write(json.dumps(header, sort_keys=True) + "\n")
        for uid, vec in score_set.scores.items():
            row = {"id": uid, "scores": [float(v) for v in vec]}
            handle.write(json.dumps(row, sort_keys=True) + "\n")


def read_score_file(path: str | Path) -> ScoreSet:
    with open(path, encoding="utf-8") as handle:
        lines = [l for l in handle.read().splitlines() if l.strip()]
    if not lines:
        raise FormatError(f"{path}: empty score file")
    try:
        header = json.loads(lines[0])
        system = str(header["system"])
        dim = int(header["dim"])
        scores: dict[str, np.ndarray] = {}
        for line_no, line in enumerate(lines[1:], start=2):
            row = json.loads(line)
            uid = str(row["id"])
            if uid in scores:
                raise FormatError(f"{path}:{line_no}: duplicate id {uid!r}")
            vec = np.asarray(row["scores"], dtype=np.float64)
            if vec.shape != (dim,):
                raise FormatError(
                    f"{path}:{line_no}: score length {vec.size} != header dim {dim}"
                )
            scores[uid] = vec
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: malformed score file: {exc}") from exc
    return ScoreSet(system=system, scores=scores)


@dataclass
class FusionReport:
    """Pooled results per combination plus per-round detail and audits."""

    rows: list[ResultRow]
    class_names: tuple[str, ...]
    per_round: dict[str, list[dict]] = field(default_factory=dict)
    audits: list[dict] = field(default_factory=list)

    def row_for(self, name: str) -> ResultRow:
        for row in self.rows:
            if row.system == name:
                return row
        raise CoverageError(f"no result row named {name!r}")


def _matrix_for(
    systems: Sequence[ScoreSet], ids: Sequence[str]
) -> np.ndarray:
    return np.stack(
        [concat_scores([s.vector_for(uid) for s in systems]) for uid in ids]
    )


def run_fusion_experiment(
    system_scores: Mapping[str, Mapping[int, ScoreSet]],
    corpus: Corpus,
    plan: FoldPlan,
    combinations: Sequence[Sequence[str]],
    rounds: Sequence[int] | None = None,
    svm_params: Mapping | None = None,
    seed: int = 0,
) -> FusionReport:
    """Train and score an SVM per combination and round.

    ``system_scores`` maps system name -> round index -> ScoreSet
    covering at least that round's train and test utterances. Results
    pool the confusion matrices over rounds. Every round's audit
    (train/test sizes, empty overlap, speaker disjointness) is recorded.
    """
    round_list = list(rounds) if rounds is not None else list(range(plan.k))
    if not round_list:
        raise ConfigError("need at least one round")
    if not combinations:
        raise ConfigError("need at least one system combination")
    svm_params = dict(svm_params or {})
    svm_params.setdefault("num_classes", corpus.num_classes)

    report = FusionReport(rows=[], class_names=corpus.label_names)
    for combo_idx, combo in enumerate(combinations):
        names = list(combo)
        if not names:
            raise ConfigError("a combination must name at least one system")
        for name in names:
            if name not in system_scores:
                raise CoverageError(f"no scores for system {name!r}")
        combo_name = "+".join(names)
        pooled = np.zeros((corpus.num_classes, corpus.num_classes), dtype=np.int64)
        round_records: list[dict] = []
        for r in round_list:
            split = plan.round_split(r)
            sets = []
            for name in names:
                per_round = system_scores[name]
                if r not in per_round:
                    raise CoverageError(f"system {name!r} has no scores for round {r}")
                sets.append(per_round[r])
            x_train = _matrix_for(sets, split.train_ids)
            y_train = corpus.labels_for(split.train_ids)
            x_test = _matrix_for(sets, split.test_ids)
            y_test = corpus.labels_for(split.test_ids)
            svm = LinearSvmClassifier(
                seed=child_seed(seed, _SVM_STREAM, combo_idx, r), **svm_params
            )
            svm.fit(x_train, y_train)
            preds = svm.predict(x_test)
            cm = confusion(y_test, preds, corpus.num_classes)
            pooled += cm

            train_speakers = {corpus[uid].speaker for uid in split.train_ids}
            test_speakers = {corpus[uid].speaker for uid in split.test_ids}
            audit = {
                "combination": combo_name,
                "round": r,
                "n_train": len(split.train_ids),
                "n_test": len(split.test_ids),
                "id_overlap": len(set(split.train_ids) & set(split.test_ids)),
                "speaker_overlap": len(train_speakers & test_speakers),
            }
            if audit["id_overlap"] or audit["speaker_overlap"]:
                raise ConfigError(
                    f"fold isolation violated in round {r}: {audit}"
                )
            report.audits.append(audit)
            try:
                round_ua = ua(cm)
            except UndefinedMetricError:
                # A class can be absent from one small test fold; the
                # pooled matrix is still fully defined.
                round_ua = None
            round_records.append(
                {"round": r, "confusion": cm.tolist(), "wa": wa(cm), "ua": round_ua}
            )
        report.rows.append(ResultRow(system=combo_name, cm=pooled))
        report.per_round[combo_name] = round_records
    return report
