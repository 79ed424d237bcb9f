"""Combined objective: closed-form values, structure and gradients.

Reference constants computed independently:
  sigmoid(1)  = 0.7310585786300049
  sigmoid(-1) = 0.2689414213699951
  -ln(sigmoid(1))     = 0.3132616875182228
  -ln(1 - sigmoid(1)) = 1.3132616875182228
  ln 2                = 0.6931471805599453
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from emofusion.exceptions import (
    ConfigError,
    DegenerateDataError,
    EmptySequenceError,
    NumericError,
    ShapeError,
)
from emofusion.objective import (
    PairBatch,
    batch_objective,
    cosine_gap,
    pair_similarity,
    verification_loss,
)

SIG1 = 0.7310585786300049
LN2 = 0.6931471805599453


class TestPairSimilarity:
    def test_parallel_vectors(self):
        a = np.array([2.0, 0.0])
        assert pair_similarity(a, 3 * a) == pytest.approx(SIG1, abs=1e-12)

    def test_orthogonal_vectors(self):
        assert pair_similarity(np.array([1.0, 0.0]), np.array([0.0, 5.0])) == pytest.approx(0.5, abs=1e-12)

    def test_opposite_vectors(self):
        a = np.array([1.0, 1.0])
        assert pair_similarity(a, -a) == pytest.approx(1.0 - SIG1, abs=1e-12)

    def test_zero_vector_is_direction_free(self):
        assert pair_similarity(np.zeros(3), np.ones(3)) == 0.5

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=4), rng.normal(size=4)
        assert pair_similarity(a, b) == pytest.approx(pair_similarity(10 * a, 0.01 * b), abs=1e-12)

    def test_shape_and_nan_errors(self):
        with pytest.raises(ShapeError):
            pair_similarity(np.zeros(2), np.zeros(3))
        with pytest.raises(NumericError):
            pair_similarity(np.array([np.nan, 0.0]), np.zeros(2))


class TestVerificationLoss:
    def test_same_class_parallel(self):
        a = np.array([1.0, 2.0])
        assert verification_loss(a, a, True) == pytest.approx(0.3132616875182228, abs=1e-12)

    def test_different_class_parallel(self):
        a = np.array([1.0, 2.0])
        assert verification_loss(a, a, False) == pytest.approx(1.3132616875182228, abs=1e-12)

    def test_orthogonal_either_label(self):
        a, b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        assert verification_loss(a, b, True) == pytest.approx(LN2, abs=1e-12)
        assert verification_loss(a, b, False) == pytest.approx(LN2, abs=1e-12)


class TestBatchStructure:
    def test_single_utterance_is_plain_cross_entropy(self):
        logits = np.array([[2.0, 0.5, -1.0]])
        result = batch_objective(
            PairBatch(np.ones((1, 4)), logits, np.array([1]), verification_weight=0.3)
        )
        z = logits[0]
        expected = -z[1] + math.log(sum(math.exp(v) for v in z))
        assert result.value == pytest.approx(expected, rel=1e-12)
        assert result.normalized == result.value
        assert result.verification_sum == 0.0
        np.testing.assert_array_equal(result.d_embeddings, np.zeros((1, 4)))

    def test_lambda_zero_scales_cross_entropy_sum(self):
        rng = np.random.default_rng(0)
        m = 4
        batch = PairBatch(
            rng.normal(size=(m, 5)),
            rng.normal(size=(m, 3)),
            np.array([0, 1, 2, 0]),
            verification_weight=0.0,
        )
        result = batch_objective(batch)
        assert result.value == pytest.approx((m - 1) * result.cross_entropies.sum(), rel=1e-12)
        np.testing.assert_array_equal(result.d_embeddings, np.zeros((m, 5)))

    def test_two_utterance_worked_example(self):
        # Orthogonal embeddings, different labels: pair term is
        # 2 * lambda * ln 2. Logits tuned so H_0 = 0.3 and H_1 = 0.5.
        logits0 = [math.log(math.exp(-0.3) / (1 - math.exp(-0.3))), 0.0]
        logits1 = [math.log(math.exp(0.5) - 1.0), 0.0]
        batch = PairBatch(
            np.array([[1.0, 0.0], [0.0, 1.0]]),
            np.array([logits0, logits1]),
            np.array([0, 1]),
            verification_weight=0.1,
        )
        result = batch_objective(batch)
        expected = (0.3 + 0.5) + 0.1 * 2.0 * LN2
        assert result.value == pytest.approx(expected, abs=1e-6)
        assert result.verification_sum == pytest.approx(2.0 * LN2, abs=1e-9)

    def test_each_unordered_pair_counted_twice(self):
        emb = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        batch = PairBatch(
            emb, np.zeros((3, 2)), np.array([0, 0, 1]), verification_weight=1.0
        )
        result = batch_objective(batch)
        # pairs: (0,1) same parallel, (0,2) diff orthogonal, (1,2) diff orthogonal
        per_unordered = -math.log(SIG1) + 2 * LN2
        assert result.verification_sum == pytest.approx(2.0 * per_unordered, rel=1e-12)

    def test_normalization_divides_by_m_times_m_minus_1(self):
        rng = np.random.default_rng(1)
        batch = PairBatch(
            rng.normal(size=(3, 4)),
            rng.normal(size=(3, 2)),
            np.array([0, 1, 0]),
            verification_weight=0.2,
        )
        result = batch_objective(batch)
        assert result.normalized == pytest.approx(result.value / 6.0, rel=1e-12)

    def test_logit_gradient_scaled_by_m_minus_1(self):
        logits = np.array([[0.3, -0.2], [0.1, 0.4], [0.0, 0.0]])
        labels = np.array([0, 1, 1])
        batch = PairBatch(np.ones((3, 2)), logits, labels, verification_weight=0.0)
        result = batch_objective(batch)
        for i in range(3):
            z = logits[i] - logits[i].max()
            probs = np.exp(z) / np.exp(z).sum()
            expected = probs.copy()
            expected[labels[i]] -= 1.0
            np.testing.assert_allclose(result.d_logits[i], 2.0 * expected, rtol=1e-12)


class TestBatchGradients:
    @pytest.mark.parametrize("seed", range(3))
    def test_embedding_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        emb = rng.normal(size=(4, 3))
        logits = rng.normal(size=(4, 2))
        labels = np.array([0, 1, 0, 1])

        def value(e):
            return batch_objective(
                PairBatch(e, logits, labels, verification_weight=0.25)
            ).value

        result = batch_objective(PairBatch(emb, logits, labels, verification_weight=0.25))
        step = 1e-6
        for i in range(4):
            for d in range(3):
                bumped = emb.copy()
                bumped[i, d] += step
                up = value(bumped)
                bumped[i, d] -= 2 * step
                down = value(bumped)
                numeric = (up - down) / (2 * step)
                assert abs(numeric - result.d_embeddings[i, d]) < 1e-6

    def test_logit_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        emb = rng.normal(size=(3, 3))
        logits = rng.normal(size=(3, 4))
        labels = np.array([2, 0, 3])

        def value(z):
            return batch_objective(
                PairBatch(emb, z, labels, verification_weight=0.4)
            ).value

        result = batch_objective(PairBatch(emb, logits, labels, verification_weight=0.4))
        step = 1e-6
        for i in range(3):
            for k in range(4):
                bumped = logits.copy()
                bumped[i, k] += step
                up = value(bumped)
                bumped[i, k] -= 2 * step
                down = value(bumped)
                assert abs((up - down) / (2 * step) - result.d_logits[i, k]) < 1e-6

    def test_zero_norm_embedding_gets_no_pair_gradient(self):
        emb = np.array([[0.0, 0.0], [1.0, 1.0]])
        batch = PairBatch(emb, np.zeros((2, 2)), np.array([0, 0]), verification_weight=1.0)
        result = batch_objective(batch)
        np.testing.assert_array_equal(result.d_embeddings, np.zeros((2, 2)))
        # similarity 0.5 for the degenerate pair, twice
        assert result.verification_sum == pytest.approx(2.0 * LN2, rel=1e-12)


class TestPairBatchValidation:
    def test_empty_batch_rejected(self):
        with pytest.raises(EmptySequenceError):
            PairBatch(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0, dtype=int))

    def test_row_count_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            PairBatch(np.zeros((2, 2)), np.zeros((3, 2)), np.array([0, 1]))

    def test_float_labels_rejected(self):
        with pytest.raises(ShapeError):
            PairBatch(np.zeros((2, 2)), np.zeros((2, 2)), np.array([0.0, 1.0]))

    def test_label_out_of_range_rejected(self):
        with pytest.raises(IndexError):
            PairBatch(np.zeros((2, 2)), np.zeros((2, 2)), np.array([0, 2]))

    def test_negative_weight_rejected(self):
        with pytest.raises(ConfigError):
            PairBatch(np.zeros((2, 2)), np.zeros((2, 2)), np.array([0, 1]), verification_weight=-0.1)


class TestCosineGap:
    def test_separated_clusters_have_positive_gap(self):
        emb = np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9]])
        labels = np.array([0, 0, 1, 1])
        gap, intra, inter = cosine_gap(emb, labels)
        assert gap > 0.5
        assert intra > inter
        assert gap == pytest.approx(intra - inter, rel=1e-12)

    def test_hand_computed_values(self):
        emb = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        labels = np.array([0, 1, 0])
        gap, intra, inter = cosine_gap(emb, labels)
        assert intra == pytest.approx(1.0, abs=1e-12)
        assert inter == pytest.approx(0.0, abs=1e-12)
        assert gap == pytest.approx(1.0, abs=1e-12)

    def test_missing_pair_kind_rejected(self):
        with pytest.raises(DegenerateDataError):
            cosine_gap(np.ones((3, 2)), np.array([0, 0, 0]))
        with pytest.raises(DegenerateDataError):
            cosine_gap(np.ones((2, 2)), np.array([0, 1]))

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            cosine_gap(np.ones(4), np.array([0, 1]))
        with pytest.raises(ShapeError):
            cosine_gap(np.ones((3, 2)), np.array([0, 1]))
