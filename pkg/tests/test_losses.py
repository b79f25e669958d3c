"""
Unit tests for cross-entropy and the supervised contrastive loss
"""

import math

import numpy as np
import pytest

from src.training.losses import SclBatch, cross_entropy, scl_loss, scl_loss_bruteforce
from src.utils.errors import EmptyBatchError


class TestCrossEntropy:
    """Mean softmax cross-entropy and its logit gradient"""

    def test_uniform_logits(self):
        loss, _ = cross_entropy(np.array([[0.0, 0.0]]), np.array([1]))
        assert loss == pytest.approx(math.log(2), abs=1e-15)

    def test_large_logits_do_not_overflow(self):
        loss, grad = cross_entropy(np.array([[1000.0, -1000.0]]), np.array([0]))
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.isfinite(grad))

    def test_matches_naive_formula(self):
        rng = np.random.default_rng(0)
        logits = rng.normal(size=(3, 2))
        labels = np.array([0, 1, 1])
        naive = np.mean([-math.log(math.exp(l[y]) / sum(math.exp(v) for v in l)) for l, y in zip(logits, labels)])
        loss, _ = cross_entropy(logits, labels)
        assert loss == pytest.approx(naive, abs=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        logits = rng.normal(size=(4, 2))
        labels = np.array([1, 0, 0, 1])
        _, grad = cross_entropy(logits, labels)
        h = 1e-6
        for i in range(4):
            for c in range(2):
                plus, minus = logits.copy(), logits.copy()
                plus[i, c] += h
                minus[i, c] -= h
                numeric = (cross_entropy(plus, labels)[0] - cross_entropy(minus, labels)[0]) / (2 * h)
                assert grad[i, c] == pytest.approx(numeric, abs=1e-8)

    def test_empty_batch_rejected(self):
        with pytest.raises(EmptyBatchError):
            cross_entropy(np.zeros((0, 2)), np.zeros(0, dtype=int))

    def test_label_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            cross_entropy(np.zeros((1, 2)), np.array([2]))


class TestSclLoss:
    """Supervised contrastive loss conventions"""

    @staticmethod
    def _random_batch(rng, n=None, d=None, temperature=None):
        n = n or int(rng.integers(1, 17))
        d = d or int(rng.integers(1, 9))
        temperature = temperature or float(rng.choice([0.05, 0.5, 1.0]))
        return SclBatch(rng.normal(size=(n, d)), rng.integers(0, 2, size=n), temperature)

    def test_two_same_class_samples_give_zero(self):
        loss, grad = scl_loss(SclBatch(np.array([[0.3, 0.4], [-1.0, 2.0]]), np.array([1, 1]), 0.05))
        assert loss == pytest.approx(0.0, abs=1e-15)
        assert np.allclose(grad, 0.0)

    def test_two_different_class_samples_give_zero(self):
        loss, grad = scl_loss(SclBatch(np.array([[0.3, 0.4], [-1.0, 2.0]]), np.array([0, 1]), 0.05))
        assert loss == 0.0
        assert np.all(grad == 0.0)

    def test_three_sample_value(self):
        batch = SclBatch(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]), np.array([1, 1, 0]), 0.05)
        expected = (math.log(1 + math.exp(-20)) + math.log(2)) / 2
        assert scl_loss(batch)[0] == pytest.approx(expected, abs=1e-12)
        assert scl_loss_bruteforce(batch) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("seed", range(50))
    def test_matches_bruteforce_oracle(self, seed):
        batch = self._random_batch(np.random.default_rng(seed))
        assert scl_loss(batch)[0] == pytest.approx(scl_loss_bruteforce(batch), abs=1e-10)

    def test_oracle_with_empty_positive_anchor(self):
        # the single label-0 sample has no positive
        rng = np.random.default_rng(3)
        batch = SclBatch(rng.normal(size=(5, 3)), np.array([1, 1, 0, 1, 1]), 0.5)
        assert scl_loss(batch)[0] == pytest.approx(scl_loss_bruteforce(batch), abs=1e-10)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(4)
        batch = self._random_batch(rng, n=10, d=4, temperature=0.5)
        order = rng.permutation(10)
        permuted = SclBatch(batch.embeddings[order], batch.labels[order], 0.5)
        assert scl_loss(permuted)[0] == pytest.approx(scl_loss(batch)[0], abs=1e-12)

    def test_row_scaling_invariant(self):
        rng = np.random.default_rng(5)
        batch = self._random_batch(rng, n=8, d=3, temperature=0.5)
        scaled = batch.embeddings * rng.uniform(0.1, 10.0, size=(8, 1))
        assert scl_loss(SclBatch(scaled, batch.labels, 0.5))[0] == pytest.approx(scl_loss(batch)[0], abs=1e-12)

    def test_closer_negative_increases_loss(self):
        losses = []
        for angle in np.linspace(np.pi, np.pi / 3, 5):
            embeddings = np.array([[1.0, 0.0], [1.0, 0.0], [np.cos(angle), np.sin(angle)]])
            losses.append(scl_loss(SclBatch(embeddings, np.array([1, 1, 0]), 0.5))[0])
        assert all(a < b for a, b in zip(losses, losses[1:]))

    def test_non_negative_when_every_anchor_has_positives(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            labels = np.array([0, 0, 1, 1, 0, 1])
            assert scl_loss(SclBatch(rng.normal(size=(6, 3)), labels, 0.05))[0] >= 0.0

    @pytest.mark.parametrize("temperature", [0.05, 0.5, 1.0])
    def test_gradient_matches_finite_differences(self, temperature):
        rng = np.random.default_rng(7)
        embeddings = rng.normal(size=(6, 3))
        labels = np.array([0, 1, 0, 1, 1, 0])
        _, grad = scl_loss(SclBatch(embeddings, labels, temperature))
        h = 1e-5
        numeric = np.zeros_like(embeddings)
        for idx in np.ndindex(embeddings.shape):
            plus, minus = embeddings.copy(), embeddings.copy()
            plus[idx] += h
            minus[idx] -= h
            numeric[idx] = (
                scl_loss(SclBatch(plus, labels, temperature))[0] - scl_loss(SclBatch(minus, labels, temperature))[0]
            ) / (2 * h)
        error = np.abs(grad - numeric) / np.maximum(np.maximum(np.abs(grad), np.abs(numeric)), 1e-5)
        assert error.max() < 1e-4

    def test_zero_row_stays_finite(self):
        embeddings = np.array([[0.0, 0.0], [1.0, 0.5], [0.2, -1.0]])
        loss, grad = scl_loss(SclBatch(embeddings, np.array([1, 1, 0]), 0.5))
        assert np.isfinite(loss)
        assert np.all(grad[0] == 0.0)

    def test_invalid_temperature_rejected(self):
        with pytest.raises(ValueError):
            SclBatch(np.ones((2, 2)), np.array([0, 1]), 0.0)

    def test_empty_batch_rejected(self):
        with pytest.raises(EmptyBatchError):
            SclBatch(np.zeros((0, 2)), np.zeros(0, dtype=int), 0.5)
