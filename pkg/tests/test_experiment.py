"""Round training drivers: coverage, fold isolation, sweeps, selection."""

from __future__ import annotations

import numpy as np
import pytest

from emofusion.data import Corpus, Utterance, make_folds
from emofusion.exceptions import ConfigError, CoverageError
from emofusion.experiment import (
    select_verification_weight,
    sweep_modules,
    train_acoustic_round,
    train_evector_round,
    train_text_round,
)

from conftest import build_corpus

TEXT_PARAMS = dict(
    kernel_sizes=(1,), embed_dim=6, filters_per_module=3,
    batch_size=8, n_epochs=3, learning_rate=0.05,
)


def toy_features(corpus, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    feats = {}
    for u in corpus:
        shift = (u.label - 1) * 2.0
        feats[u.uid] = shift + 0.3 * rng.normal(size=(int(rng.integers(3, 6)), dim))
    return feats


def with_unique_test_token(corpus, plan, round_index):
    """Give the first test utterance of the round a token no other
    utterance has, for vocabulary leakage probes."""
    target = plan.round_split(round_index).test_ids[0]
    utts = tuple(
        Utterance(
            uid=u.uid,
            speaker=u.speaker,
            label=u.label,
            tokens=u.tokens + ("uniquetok",) if u.uid == target else u.tokens,
            feature_path=u.feature_path,
        )
        for u in corpus
    )
    return Corpus(utts, corpus.label_names)


class TestTextRound:
    def setup_method(self):
        self.corpus = build_corpus(n_per_class=8, num_classes=3, n_speakers=6)
        self.plan = make_folds(self.corpus, 3, np.random.default_rng(1))

    def test_scores_cover_whole_corpus(self):
        art = train_text_round(self.corpus, self.plan, 0, params=TEXT_PARAMS)
        assert art.system == "mcnn"
        assert art.round_index == 0
        assert set(art.scores.scores) == set(self.corpus.ids)
        assert art.scores.dim == 3
        assert art.history

    def test_vocabulary_sees_training_fold_only(self):
        corpus = with_unique_test_token(self.corpus, self.plan, 0)
        art = train_text_round(corpus, self.plan, 0, params=TEXT_PARAMS)
        assert "uniquetok" not in art.estimator.vocab_
        # sanity: a word every class uses is in vocabulary
        assert "common" in art.estimator.vocab_

    def test_deterministic(self):
        a = train_text_round(self.corpus, self.plan, 1, params=TEXT_PARAMS, seed=3)
        b = train_text_round(self.corpus, self.plan, 1, params=TEXT_PARAMS, seed=3)
        for uid in self.corpus.ids:
            np.testing.assert_array_equal(
                a.scores.vector_for(uid), b.scores.vector_for(uid)
            )

    def test_rounds_use_different_seeds(self):
        a = train_text_round(self.corpus, self.plan, 0, params=TEXT_PARAMS, seed=3)
        b = train_text_round(self.corpus, self.plan, 1, params=TEXT_PARAMS, seed=3)
        assert a.estimator.seed != b.estimator.seed


class TestAcousticRound:
    def setup_method(self):
        self.corpus = build_corpus(n_per_class=6, num_classes=3, n_speakers=6)
        self.plan = make_folds(self.corpus, 3, np.random.default_rng(1))
        self.features = toy_features(self.corpus)
        self.params = dict(
            lstm_units=(4,), dense_units=4, dropout=0.0,
            batch_size=8, n_epochs=2, learning_rate=0.05,
        )

    def test_scores_cover_whole_corpus(self):
        art = train_acoustic_round(
            self.corpus, self.features, self.plan, 0, params=self.params
        )
        assert art.system == "lstm"
        assert set(art.scores.scores) == set(self.corpus.ids)
        assert art.scores.dim == 3

    def test_normalization_uses_training_fold_only(self):
        art = train_acoustic_round(
            self.corpus, self.features, self.plan, 0, params=self.params
        )
        split = self.plan.round_split(0)
        train_rows = np.concatenate([self.features[uid] for uid in split.train_ids])
        np.testing.assert_allclose(
            art.estimator.feature_mean_, train_rows.mean(axis=0), rtol=1e-12
        )

    def test_missing_features_rejected(self):
        feats = dict(self.features)
        feats.pop(self.corpus.ids[0])
        with pytest.raises(CoverageError):
            train_acoustic_round(self.corpus, feats, self.plan, 0, params=self.params)


class TestEvectorRound:
    def setup_method(self):
        self.corpus = build_corpus(n_per_class=6, num_classes=3, n_speakers=6)
        self.plan = make_folds(self.corpus, 3, np.random.default_rng(1))

    def test_scores_cover_whole_corpus(self):
        art = train_evector_round(self.corpus, self.plan, 0)
        assert art.system == "evector"
        assert set(art.scores.scores) == set(self.corpus.ids)
        assert art.scores.dim == 3
        assert art.history == []

    def test_table_sees_training_fold_only(self):
        corpus = with_unique_test_token(self.corpus, self.plan, 0)
        art = train_evector_round(corpus, self.plan, 0)
        assert "uniquetok" not in art.estimator.table_
        assert "common" in art.estimator.table_

    def test_matches_direct_fit(self):
        from emofusion.evector import fit_word_weights

        art = train_evector_round(self.corpus, self.plan, 1, params={"alpha": 0.5})
        split = self.plan.round_split(1)
        direct = fit_word_weights(
            self.corpus.tokens_for(split.train_ids),
            self.corpus.labels_for(split.train_ids),
            num_classes=3,
            alpha=0.5,
        )
        assert art.estimator.table_.digest() == direct.digest()


class TestWeightSelection:
    def setup_method(self):
        self.corpus = build_corpus(n_per_class=8, num_classes=2, n_speakers=6)
        self.plan = make_folds(self.corpus, 3, np.random.default_rng(2))

    def test_returns_grid_member_and_table(self):
        weight, clf, table = select_verification_weight(
            self.corpus, self.plan, 0,
            params=dict(TEXT_PARAMS, n_epochs=6),
            grid=(0.05, 0.15),
        )
        assert weight in (0.05, 0.15)
        assert clf.verification_weight == weight
        assert [row["verification_weight"] for row in table] == [0.05, 0.15]
        assert all(0.0 <= row["val_ua"] <= 1.0 for row in table)

    def test_tie_goes_to_earliest(self):
        # On this trivially separable corpus every weight reaches a
        # perfect validation score, so the tie rule decides.
        weight, _, table = select_verification_weight(
            self.corpus, self.plan, 0,
            params=dict(TEXT_PARAMS, n_epochs=10),
            grid=(0.05, 0.1, 0.15),
        )
        top = max(row["val_ua"] for row in table)
        earliest = next(
            row["verification_weight"] for row in table if row["val_ua"] == top
        )
        assert weight == earliest

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError):
            select_verification_weight(self.corpus, self.plan, 0, grid=())


class TestModuleSweep:
    def setup_method(self):
        self.corpus = build_corpus(n_per_class=8, num_classes=2, n_speakers=6)
        self.plan = make_folds(self.corpus, 3, np.random.default_rng(2))

    def test_schedule_shapes(self):
        rows = sweep_modules(
            self.corpus, self.plan, max_modules=3,
            params=dict(TEXT_PARAMS, n_epochs=2), rounds=[0],
        )
        assert [row["n_modules"] for row in rows] == [1, 2, 3]
        assert rows[0]["kernel_sizes"] == [1]
        assert rows[1]["kernel_sizes"] == [1, 2]
        assert rows[2]["kernel_sizes"] == [1, 2, 3]
        for row in rows:
            assert 0.0 <= row["ua"] <= 1.0
            assert np.asarray(row["confusion"]).sum() == len(self.plan.fold_ids[0])

    def test_increment(self):
        rows = sweep_modules(
            self.corpus, self.plan, max_modules=2,
            params=dict(TEXT_PARAMS, n_epochs=2), increment=3, rounds=[0],
        )
        assert rows[1]["kernel_sizes"] == [1, 4]

    def test_pools_over_rounds(self):
        rows = sweep_modules(
            self.corpus, self.plan, max_modules=1,
            params=dict(TEXT_PARAMS, n_epochs=2),
        )
        assert np.asarray(rows[0]["confusion"]).sum() == len(self.corpus)

    def test_bad_arguments_rejected(self):
        with pytest.raises(ConfigError):
            sweep_modules(self.corpus, self.plan, 0)
        with pytest.raises(ConfigError):
            sweep_modules(self.corpus, self.plan, 2, increment=0)
        with pytest.raises(ConfigError):
            sweep_modules(self.corpus, self.plan, 2, rounds=[])
