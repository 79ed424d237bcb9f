"""Per-round training, score emission, module sweeps, weight selection.

Every cross-validation round trains fresh models on that round's
training fold (validation fold steering snapshot selection), then
scores every utterance in the corpus so downstream fusion can slice
whatever it needs. All randomness is derived from one experiment seed
through fixed stream ids, so reruns are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .acoustic import AcousticLstmClassifier
from .data import Corpus, FoldPlan
from .evector import EvectorVectorizer
from .exceptions import ConfigError, CoverageError
from .fusion import ScoreSet
from .mcnn import McnnClassifier
from .metrics import confusion, ua, wa
from .utils import child_seed

__all__ = [
    "RoundArtifacts",
    "select_verification_weight",
    "sweep_modules",
    "train_acoustic_round",
    "train_evector_round",
    "train_text_round",
]

_TEXT_STREAM = 2
_ACOUSTIC_STREAM = 3
_EVECTOR_STREAM = 4
_SWEEP_STREAM = 6
_GRID_STREAM = 7

DEFAULT_WEIGHT_GRID = (0.05, 0.10, 0.15)


@dataclass
class RoundArtifacts:
    """What one system produces for one round."""

    system: str
    round_index: int
    estimator: object
    scores: ScoreSet
    history: list[dict]


def _best_val_ua(history: Sequence[Mapping]) -> float:
    vals = [rec["val_ua"] for rec in history if "val_ua" in rec]
    if not vals:
        raise ConfigError("training history holds no validation records")
    return float(max(vals))


def train_text_round(
    corpus: Corpus,
    plan: FoldPlan,
    round_index: int,
    params: Mapping | None = None,
    seed: int = 0,
) -> RoundArtifacts:
    """Train the text model for one round and score the whole corpus."""
    split = plan.round_split(round_index)
    params = dict(params or {})
    params.setdefault("num_classes", corpus.num_classes)
    params.setdefault("seed", child_seed(seed, _TEXT_STREAM, round_index))
    clf = McnnClassifier(**params)
    clf.fit(
        corpus.tokens_for(split.train_ids),
        corpus.labels_for(split.train_ids),
        validation=(
            corpus.tokens_for(split.val_ids),
            corpus.labels_for(split.val_ids),
        ),
    )
    probs = clf.predict_proba(corpus.tokens_for(corpus.ids))
    scores = ScoreSet(
        system="mcnn", scores={uid: probs[i] for i, uid in enumerate(corpus.ids)}
    )
    return RoundArtifacts("mcnn", round_index, clf, scores, clf.history_)


def train_acoustic_round(
    corpus: Corpus,
    features: Mapping[str, np.ndarray],
    plan: FoldPlan,
    round_index: int,
    params: Mapping | None = None,
    seed: int = 0,
) -> RoundArtifacts:
    """Train the acoustic model for one round and score the whole corpus."""
    split = plan.round_split(round_index)
    missing = [uid for uid in corpus.ids if uid not in features]
    if missing:
        raise CoverageError(f"no features for ids: {missing[:5]}")
    params = dict(params or {})
    params.setdefault("num_classes", corpus.num_classes)
    params.setdefault("seed", child_seed(seed, _ACOUSTIC_STREAM, round_index))
    clf = AcousticLstmClassifier(**params)
    clf.fit(
        [features[uid] for uid in split.train_ids],
        corpus.labels_for(split.train_ids),
        validation=(
            [features[uid] for uid in split.val_ids],
            corpus.labels_for(split.val_ids),
        ),
    )
    probs = clf.predict_proba([features[uid] for uid in corpus.ids])
    scores = ScoreSet(
        system="lstm", scores={uid: probs[i] for i, uid in enumerate(corpus.ids)}
    )
    return RoundArtifacts("lstm", round_index, clf, scores, clf.history_)


def train_evector_round(
    corpus: Corpus,
    plan: FoldPlan,
    round_index: int,
    params: Mapping | None = None,
    seed: int = 0,
) -> RoundArtifacts:
    """Fit the e-vector table on the training fold and embed everything.

    The table is a closed-form count estimate, so there is no epoch
    history; the seed only keeps the signature uniform.
    """
    del seed  # deterministic closed form; nothing to randomize
    split = plan.round_split(round_index)
    params = dict(params or {})
    params.setdefault("num_classes", corpus.num_classes)
    vec = EvectorVectorizer(**params)
    vec.fit(corpus.tokens_for(split.train_ids), corpus.labels_for(split.train_ids))
    mat = vec.transform(corpus.tokens_for(corpus.ids))
    scores = ScoreSet(
        system="evector", scores={uid: mat[i] for i, uid in enumerate(corpus.ids)}
    )
    return RoundArtifacts("evector", round_index, vec, scores, [])


def select_verification_weight(
    corpus: Corpus,
    plan: FoldPlan,
    round_index: int,
    params: Mapping | None = None,
    grid: Sequence[float] = DEFAULT_WEIGHT_GRID,
    seed: int = 0,
) -> tuple[float, McnnClassifier, list[dict]]:
    """Pick the verification weight with the best validation mean recall.

    Trains one text model per grid value on the round's training fold.
    Returns (best_weight, its fitted model, the per-weight table); ties
    go to the earliest grid entry.
    """
    if not grid:
        raise ConfigError("the weight grid must not be empty")
    split = plan.round_split(round_index)
    base = dict(params or {})
    base.setdefault("num_classes", corpus.num_classes)
    table: list[dict] = []
    best: tuple[float, McnnClassifier] | None = None
    best_ua = -1.0
    for gi, weight in enumerate(grid):
        run = dict(base)
        run["verification_weight"] = float(weight)
        run.setdefault("seed", child_seed(seed, _GRID_STREAM, round_index, gi))
        clf = McnnClassifier(**run)
        clf.fit(
            corpus.tokens_for(split.train_ids),
            corpus.labels_for(split.train_ids),
            validation=(
                corpus.tokens_for(split.val_ids),
                corpus.labels_for(split.val_ids),
            ),
        )
        val = _best_val_ua(clf.history_)
        table.append({"verification_weight": float(weight), "val_ua": val})
        if val > best_ua:
            best_ua = val
            best = (float(weight), clf)
    assert best is not None
    return best[0], best[1], table


def sweep_modules(
    corpus: Corpus,
    plan: FoldPlan,
    max_modules: int,
    params: Mapping | None = None,
    increment: int = 1,
    rounds: Sequence[int] | None = None,
    seed: int = 0,
) -> list[dict]:
    """Sweep the number of convolution modules at a fixed width step.

    Setup n uses kernel widths 1, 1 + increment, ..., 1 + (n - 1) *
    increment. The verification term is off for the whole sweep so the
    architecture effect is measured in isolation. Each setup is scored
    on the pooled test confusion over the requested rounds.
    """
    if max_modules < 1:
        raise ConfigError(f"max_modules must be >= 1, got {max_modules}")
    if increment < 1:
        raise ConfigError(f"increment must be >= 1, got {increment}")
    round_list = list(rounds) if rounds is not None else list(range(plan.k))
    if not round_list:
        raise ConfigError("need at least one round")
    base = dict(params or {})
    base["verification_weight"] = 0.0
    base.setdefault("num_classes", corpus.num_classes)
    results: list[dict] = []
    for n in range(1, max_modules + 1):
        sizes = tuple(1 + i * increment for i in range(n))
        pooled = np.zeros((corpus.num_classes, corpus.num_classes), dtype=np.int64)
        for r in round_list:
            split = plan.round_split(r)
            run = dict(base)
            run["kernel_sizes"] = sizes
            run["seed"] = child_seed(seed, _SWEEP_STREAM, n, r)
            clf = McnnClassifier(**run)
            clf.fit(
                corpus.tokens_for(split.train_ids),
                corpus.labels_for(split.train_ids),
                validation=(
                    corpus.tokens_for(split.val_ids),
                    corpus.labels_for(split.val_ids),
                ),
            )
            preds = clf.predict(corpus.tokens_for(split.test_ids))
            pooled += confusion(
                corpus.labels_for(split.test_ids), preds, corpus.num_classes
            )
        results.append(
            {
                "n_modules": n,
                "kernel_sizes": list(sizes),
                "ua": ua(pooled),
                "wa": wa(pooled),
                "confusion": pooled.tolist(),
            }
        )
    return results
