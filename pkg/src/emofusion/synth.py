"""Synthetic corpus generator with controllable class separability.

Text: every class belongs to a text group; each group owns a private
token pool, and all classes share a common pool. A token comes from the
class's group pool with probability ``text_signal``, otherwise from the
shared pool, so ``text_signal=1`` makes classes (up to group identity)
perfectly separable from text and ``text_signal=0`` makes text useless.

Acoustics: every acoustic group gets a fixed mean vector of norm 2;
frames are that mean scaled by ``acoustic_signal`` plus unit Gaussian
noise.

Classes that share a text group are indistinguishable from text alone,
and likewise for acoustic groups, which is how corpora with
complementary modalities are built: make the text groups merge one
class pair and the acoustic groups a different pair, and only a fused
system can separate all classes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .acoustic import save_feature_csv
from .data import Corpus, Utterance, save_corpus
from .exceptions import ConfigError
from .utils import dump_json, rng_for

__all__ = ["SynthResult", "SynthSpec", "synth_corpus", "synth_preset", "write_synth_corpus"]

_DEFAULT_LABELS = {
    4: ("angry", "happy", "neutral", "sad"),
    3: ("negative", "neutral", "positive"),
}


def synth_preset(name: str) -> dict:
    """Spec arguments matching the two reference corpus shapes.

    "iemocap": four classes, utterances averaging 11.56 tokens.
    "callcenter": three classes, short utterances averaging 6.73 tokens.
    """
    presets = {
        "iemocap": {"num_classes": 4, "mean_tokens": 11.56},
        "callcenter": {"num_classes": 3, "mean_tokens": 6.73},
    }
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; use one of {sorted(presets)}")
    return dict(presets[name])


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic corpus."""

    num_classes: int = 4
    utterances_per_class: int | tuple[int, ...] = 200
    num_speakers: int = 15
    vocab_size: int = 120
    text_signal: float = 1.0
    acoustic_signal: float = 1.0
    mean_tokens: float = 11.56
    mean_frames: float = 20.0
    feature_dim: int = 16
    text_groups: tuple[int, ...] | None = None
    acoustic_groups: tuple[int, ...] | None = None
    label_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        counts = self.counts
        if any(c < 1 for c in counts):
            raise ConfigError(f"utterance counts must be >= 1, got {counts}")
        if self.num_speakers < 1:
            raise ConfigError(f"num_speakers must be >= 1, got {self.num_speakers}")
        if not 0.0 <= self.text_signal <= 1.0 or not 0.0 <= self.acoustic_signal <= 1.0:
            raise ConfigError("text_signal and acoustic_signal must lie in [0, 1]")
        if self.mean_tokens <= 0.0 or self.mean_frames <= 0.0:
            raise ConfigError("mean_tokens and mean_frames must be positive")
        if self.feature_dim < 1:
            raise ConfigError(f"feature_dim must be >= 1, got {self.feature_dim}")
        for name, groups in (("text_groups", self.text_groups),
                             ("acoustic_groups", self.acoustic_groups)):
            if groups is None:
                continue
            if len(groups) != self.num_classes:
                raise ConfigError(f"{name} must list one group per class")
            if sorted(set(groups)) != list(range(max(groups) + 1)):
                raise ConfigError(f"{name} must use consecutive group ids from 0")
        n_text_groups = len(set(self.resolved_text_groups))
        if self.vocab_size < 2 * n_text_groups:
            raise ConfigError(
                f"vocab_size {self.vocab_size} too small for {n_text_groups} text groups"
            )
        if self.label_names is not None and len(self.label_names) != self.num_classes:
            raise ConfigError("label_names must list one name per class")

    @property
    def counts(self) -> tuple[int, ...]:
        if isinstance(self.utterances_per_class, int):
            return (self.utterances_per_class,) * self.num_classes
        counts = tuple(int(c) for c in self.utterances_per_class)
        if len(counts) != self.num_classes:
            raise ConfigError("utterances_per_class must list one count per class")
        return counts

    @property
    def resolved_text_groups(self) -> tuple[int, ...]:
        return self.text_groups or tuple(range(self.num_classes))

    @property
    def resolved_acoustic_groups(self) -> tuple[int, ...]:
        return self.acoustic_groups or tuple(range(self.num_classes))

    @property
    def resolved_label_names(self) -> tuple[str, ...]:
        if self.label_names is not None:
            return self.label_names
        if self.num_classes in _DEFAULT_LABELS:
            return _DEFAULT_LABELS[self.num_classes]
        return tuple(f"class{i}" for i in range(self.num_classes))

    def to_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "utterances_per_class": list(self.counts),
            "num_speakers": self.num_speakers,
            "vocab_size": self.vocab_size,
            "text_signal": self.text_signal,
            "acoustic_signal": self.acoustic_signal,
            "mean_tokens": self.mean_tokens,
            "mean_frames": self.mean_frames,
            "feature_dim": self.feature_dim,
            "text_groups": list(self.resolved_text_groups),
            "acoustic_groups": list(self.resolved_acoustic_groups),
            "label_names": list(self.resolved_label_names),
        }


@dataclass
class SynthResult:
    """In-memory corpus plus the frame matrices keyed by utterance id."""

    corpus: Corpus
    features: dict[str, np.ndarray]


def _token_pools(spec: SynthSpec) -> tuple[list[str], list[list[str]]]:
    groups = sorted(set(spec.resolved_text_groups))
    n_groups = len(groups)
    shared_size = spec.vocab_size // 2
    per_group = (spec.vocab_size - shared_size) // n_groups
    shared = [f"com{i:03d}" for i in range(shared_size)]
    group_pools = [
        [f"g{g}t{i:03d}" for i in range(per_group)] for g in groups
    ]
    return shared, group_pools


def synth_corpus(spec: SynthSpec, seed: int) -> SynthResult:
    """Generate a corpus deterministically from (spec, seed)."""
    rng = rng_for(seed, 0)
    shared_pool, group_pools = _token_pools(spec)
    text_groups = spec.resolved_text_groups
    acoustic_groups = spec.resolved_acoustic_groups
    n_acoustic_groups = max(acoustic_groups) + 1
    means = np.empty((n_acoustic_groups, spec.feature_dim))
    for g in range(n_acoustic_groups):
        v = rng.standard_normal(spec.feature_dim)
        means[g] = 2.0 * v / np.linalg.norm(v)

    utterances: list[Utterance] = []
    features: dict[str, np.ndarray] = {}
    uid_counter = 0
    for c, count in enumerate(spec.counts):
        pool = group_pools[text_groups[c]]
        mean = spec.acoustic_signal * means[acoustic_groups[c]]
        for _ in range(count):
            uid = f"u{uid_counter:05d}"
            uid_counter += 1
            speaker = f"spk{int(rng.integers(spec.num_speakers)):03d}"
            n_tokens = max(1, int(rng.poisson(spec.mean_tokens)))
            tokens = tuple(
                pool[int(rng.integers(len(pool)))]
                if rng.random() < spec.text_signal
                else shared_pool[int(rng.integers(len(shared_pool)))]
                for _ in range(n_tokens)
            )
            n_frames = max(1, int(rng.poisson(spec.mean_frames)))
            frames = mean + rng.standard_normal((n_frames, spec.feature_dim))
            features[uid] = frames
            utterances.append(
                Utterance(uid=uid, speaker=speaker, label=c, tokens=tokens)
            )
    corpus = Corpus(
        utterances=tuple(utterances), label_names=spec.resolved_label_names
    )
    return SynthResult(corpus=corpus, features=features)


def write_synth_corpus(spec: SynthSpec, seed: int, out_dir: str | Path) -> Corpus:
    """Generate and write manifest + feature CSVs + a spec echo.

    Returns the written corpus (feature paths filled in, root set).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "features").mkdir(exist_ok=True)
    result = synth_corpus(spec, seed)
    with_paths = tuple(
        Utterance(
            uid=u.uid,
            speaker=u.speaker,
            label=u.label,
            tokens=u.tokens,
            feature_path=f"features/{u.uid}.csv",
        )
        for u in result.corpus
    )
    corpus = Corpus(
        utterances=with_paths,
        label_names=result.corpus.label_names,
        root=out_dir,
    )
    for u in corpus:
        save_feature_csv(out_dir / u.feature_path, result.features[u.uid])
    save_corpus(corpus, out_dir / "manifest.jsonl")
    echo = {"seed": int(seed), "spec": spec.to_dict()}
    (out_dir / "synth_spec.json").write_text(dump_json(echo, indent=2) + "\n", encoding="utf-8")
    return corpus
