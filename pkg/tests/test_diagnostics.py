"""
Unit tests for gradient alignment diagnostics and the cosine experiment
"""

import itertools

import numpy as np
import pytest

from src.model.classifier import ModelSpec, pack_params
from src.preprocessing.data_loader import Example, PlatformDataset
from src.preprocessing.feature_hashing import encode_platforms, hash_features
from src.training.diagnostics import (
    BUILTIN_TOYS,
    GradientAlignmentProbe,
    cosine_convergence_experiment,
    get_toy,
    gip,
    gip_linear,
    platform_gradient_alignment,
    quadratic_toy,
)
from src.utils.errors import DegenerateToyError


def pairwise_sum(grads):
    return sum(float(grads[i] @ grads[j]) for i, j in itertools.combinations(range(len(grads)), 2))


class TestGip:
    """Pairwise mean inner product"""

    def test_orthogonal(self):
        assert gip([np.array([1.0, 0.0]), np.array([0.0, 1.0])]) == 0.0

    def test_identical(self):
        assert gip([np.array([3.0, 4.0]), np.array([3.0, 4.0])]) == pytest.approx(25.0)

    def test_matches_double_loop(self):
        grads = list(np.random.default_rng(0).normal(size=(4, 7)))
        total = 0.0
        for i in range(4):
            for j in range(4):
                if i != j:
                    total += grads[i] @ grads[j]
        assert gip(grads) == pytest.approx(total / (4 * 3), rel=1e-12)

    def test_needs_two_gradients(self):
        with pytest.raises(ValueError):
            gip([np.ones(3)])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            gip([np.ones(3), np.ones(4)])


class TestGipLinear:
    """G_hat = ||sum G_i||^2 - sum ||G_i||^2"""

    def test_single_gradient_is_zero(self):
        assert gip_linear([np.array([1.5, -2.0, 3.0])]) == 0.0

    def test_orthogonal_pair(self):
        assert gip_linear([np.array([1.0, 1.0]), np.array([1.0, -1.0])]) == 0.0

    def test_relation_to_gip(self):
        grads = list(np.random.default_rng(1).normal(size=(8, 50)))
        assert gip_linear(grads) / (8 * 7) == pytest.approx(gip(grads), rel=1e-9)

    def test_identity_on_random_sets(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            s = int(rng.integers(2, 9))
            dim = int(rng.integers(10, 1001))
            grads = list(rng.normal(size=(s, dim)))
            expected = 2.0 * pairwise_sum(grads)
            assert gip_linear(grads) == pytest.approx(expected, rel=1e-9, abs=1e-9)


class TestPlatformGradientAlignment:
    """Full-platform gradients of a model"""

    @pytest.fixture
    def orthogonal_setup(self):
        # two words landing in buckets 0 and 1 of a 2-bucket model
        words = {}
        for k in range(200):
            word = f"w{k}"
            bucket = hash_features(word, 2).indices[0]
            words.setdefault(bucket, word)
            if len(words) == 2:
                break
        spec = ModelSpec(hash_buckets=2, hidden1=2, hidden2=2)
        params = pack_params(
            spec, W1=np.eye(2), b1=np.zeros(2), W2=np.eye(2), b2=np.zeros(2), W3=np.zeros((2, 2)), b3=np.zeros(2)
        )
        datasets = [
            PlatformDataset("a", [Example(words[0], 1, "a")]),
            PlatformDataset("b", [Example(words[1], 1, "b"), Example("", 0, "b")]),
        ]
        return params, spec, encode_platforms(datasets, 2)

    def test_disjoint_support_gives_zero(self, orthogonal_setup):
        params, spec, platforms = orthogonal_setup
        pairs, summary = platform_gradient_alignment(params, spec, platforms)
        assert summary["gip_hat"] == pytest.approx(0.0, abs=1e-15)
        assert list(pairs.columns) == ["platform_a", "platform_b", "dot"]
        assert len(pairs) == 1

    def test_identity_between_outputs(self, tiny_corpus, tiny_spec, tiny_params):
        platforms = encode_platforms(tiny_corpus[:3], tiny_spec.hash_buckets)
        pairs, summary = platform_gradient_alignment(tiny_params, tiny_spec, platforms)
        s = summary["S"]
        assert len(pairs) == 3
        assert summary["gip_hat"] == pytest.approx(s * (s - 1) * summary["gip"], rel=1e-9)
        assert summary["gip_hat"] == pytest.approx(2.0 * pairs["dot"].sum(), rel=1e-9)

    def test_penalty_scales_g_hat(self, tiny_corpus, tiny_spec, tiny_params):
        platforms = encode_platforms(tiny_corpus[:2], tiny_spec.hash_buckets)
        _, summary = platform_gradient_alignment(tiny_params, tiny_spec, platforms, gip_scale=0.5)
        assert summary["penalty"] == pytest.approx(-0.5 * summary["gip_hat"])

    def test_needs_two_platforms(self, tiny_corpus, tiny_spec, tiny_params):
        platforms = encode_platforms(tiny_corpus[:1], tiny_spec.hash_buckets)
        with pytest.raises(ValueError):
            platform_gradient_alignment(tiny_params, tiny_spec, platforms)

    def test_probe_is_deterministic(self, tiny_corpus, tiny_spec, tiny_params):
        platforms = encode_platforms(tiny_corpus[:3], tiny_spec.hash_buckets)
        a = GradientAlignmentProbe(platforms, tiny_spec, size=10, seed=3)
        b = GradientAlignmentProbe(platforms, tiny_spec, size=10, seed=3)
        assert all(len(p) == 10 for p in a.platforms)
        assert a.measure(tiny_params) == b.measure(tiny_params)

    def test_record_interval(self, tiny_corpus, tiny_spec, tiny_params):
        platforms = encode_platforms(tiny_corpus[:2], tiny_spec.hash_buckets)
        probe = GradientAlignmentProbe(platforms, tiny_spec, size=10, seed=3, every=2)
        values = [probe.record(tiny_params) for _ in range(5)]
        assert [v is None for v in values] == [False, True, False, True, False]
        assert values[0] == probe.measure(tiny_params)

    def test_record_interval_must_be_positive(self, tiny_corpus, tiny_spec):
        platforms = encode_platforms(tiny_corpus[:2], tiny_spec.hash_buckets)
        with pytest.raises(ValueError):
            GradientAlignmentProbe(platforms, tiny_spec, size=10, seed=3, every=0)


class TestCosineExperiment:
    """cosine(G_f, G_g) on the analytic toys"""

    ALPHAS = [1e-2, 1e-3, 1e-4]

    def test_identical_quadratic_domains(self):
        table = cosine_convergence_experiment(get_toy("twin-quadratic"), self.ALPHAS)
        assert list(table.columns) == ["alpha", "cosine"]
        assert np.all(np.abs(table["cosine"] - 1.0) < 1e-6)

    def test_quadratic_pair_is_exactly_aligned(self):
        table = cosine_convergence_experiment(get_toy("quadratic-pair"), [0.1] + self.ALPHAS)
        assert np.all(np.abs(table["cosine"] - 1.0) < 1e-6)

    def test_logistic_toy_converges(self):
        toy = get_toy("logistic")
        assert toy.theta0.size <= 20 and toy.n_domains == 2
        cosines = cosine_convergence_experiment(toy, self.ALPHAS)["cosine"].tolist()
        assert cosines[-1] >= 0.99
        assert cosines[0] <= cosines[1] <= cosines[2]

    @pytest.mark.parametrize("name", ["twin-quadratic", "quadratic-pair"])
    def test_common_loss_scale_leaves_cosine(self, name):
        toy = get_toy(name)
        base = cosine_convergence_experiment(toy, [1e-3])["cosine"].iloc[0]
        scaled = cosine_convergence_experiment(toy.scaled(3.0), [1e-3])["cosine"].iloc[0]
        assert scaled == pytest.approx(base, abs=1e-9)

    def test_degenerate_toy_rejected(self):
        # both domains already at their shared minimum
        toy = quadratic_toy("flat", [np.eye(2), np.eye(2)], [np.zeros(2), np.zeros(2)], np.zeros(2))
        with pytest.raises(DegenerateToyError):
            cosine_convergence_experiment(toy, [1e-3])

    def test_unknown_toy(self):
        with pytest.raises(ValueError):
            get_toy("no-such-toy")

    def test_builtin_names(self):
        assert set(BUILTIN_TOYS) == {"twin-quadratic", "quadratic-pair", "logistic"}
