"""Shared fixtures and corpus builders."""

from __future__ import annotations

import numpy as np
import pytest

from emofusion.data import Corpus, Utterance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def build_corpus(
    n_per_class: int = 6,
    num_classes: int = 3,
    n_speakers: int = 6,
    with_features: bool = False,
) -> Corpus:
    """Tiny deterministic corpus: class c talks about topic word wc."""
    utterances = []
    uid = 0
    for c in range(num_classes):
        for j in range(n_per_class):
            utterances.append(
                Utterance(
                    uid=f"u{uid:03d}",
                    speaker=f"s{uid % n_speakers}",
                    label=c,
                    tokens=(f"w{c}", f"w{c}", "common", f"x{j % 2}"),
                    feature_path=f"feat/u{uid:03d}.csv" if with_features else None,
                )
            )
            uid += 1
    names = tuple(f"class{c}" for c in range(num_classes))
    return Corpus(utterances=tuple(utterances), label_names=names)
