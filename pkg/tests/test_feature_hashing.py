"""
Unit tests for the FNV-1a feature hashing module
"""

import numpy as np
import pytest

from src.preprocessing.data_loader import Example, PlatformDataset
from src.preprocessing.feature_hashing import (
    FeatureVector,
    encode_platform,
    features_to_matrix,
    fnv1a_64,
    hash_features,
    merge_platforms,
    tokenize,
)


def reference_fnv(token):
    h = 14695981039346656037
    for byte in token.encode("utf-8"):
        h = ((h ^ byte) * 1099511628211) % 2**64
    return h


class TestFnv1a:
    """Published 64-bit FNV-1a test vectors"""

    @pytest.mark.parametrize(
        "data, expected",
        [(b"", 0xCBF29CE484222325), (b"a", 0xAF63DC4C8601EC8C), (b"foobar", 0x85944171F73967E8)],
    )
    def test_vectors(self, data, expected):
        assert fnv1a_64(data) == expected

    def test_multibyte_utf8(self):
        assert fnv1a_64("é".encode("utf-8")) == reference_fnv("é")


class TestTokenize:
    def test_lowercase_and_split(self):
        assert tokenize("You ARE, a fool!!") == ["you", "are", "a", "fool"]

    def test_underscore_and_digits(self):
        assert tokenize("spur0w3 snake_case") == ["spur0w3", "snake", "case"]

    def test_empty(self):
        assert tokenize("") == []
        assert tokenize("  ...  ") == []


class TestHashFeatures:
    """Bucketing and counting"""

    def test_known_sentence(self):
        buckets = 1 << 16
        expected = {}
        for token in ("you", "are", "a", "fool"):
            index = reference_fnv(token) % buckets
            expected[index] = expected.get(index, 0) + 1

        fv = hash_features("you are a fool", buckets)
        assert fv.as_dict() == expected
        assert list(fv.indices) == sorted(fv.indices)

    def test_case_folding(self):
        assert hash_features("You Are A FOOL", 1024) == hash_features("you are a fool", 1024)

    def test_repeated_token_counts(self):
        fv = hash_features("idiot idiot idiot", 64)
        assert fv.counts == (3,)
        assert fv.indices == (reference_fnv("idiot") % 64,)

    def test_empty_text_gives_empty_vector(self):
        fv = hash_features("", 32)
        assert len(fv) == 0
        assert fv.buckets == 32

    def test_single_bucket(self):
        assert hash_features("a b c", 1).as_dict() == {0: 3}

    def test_invalid_bucket_count(self):
        with pytest.raises(ValueError):
            hash_features("text", 0)


class TestFeatureMatrix:
    def test_rows_are_unit_norm(self):
        features = [hash_features(t, 16) for t in ("a b b", "c", "d e f g")]
        matrix = features_to_matrix(features, 16)
        norms = np.sqrt(np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel())
        assert matrix.shape == (3, 16)
        assert np.allclose(norms, 1.0, rtol=0, atol=1e-15)

    def test_zero_row_stays_zero(self):
        matrix = features_to_matrix([FeatureVector((), (), 8), hash_features("x", 8)], 8)
        assert matrix[0].nnz == 0

    def test_counts_preserve_direction(self):
        matrix = features_to_matrix([FeatureVector((1, 4), (3, 4), 8)], 8).toarray()[0]
        assert matrix[1] == pytest.approx(0.6)
        assert matrix[4] == pytest.approx(0.8)


class TestEncodedPlatform:
    @pytest.fixture
    def dataset(self):
        return PlatformDataset("p", [Example("you idiot", 1, "p"), Example("nice day", 0, "p"), Example("", 0, "p")])

    def test_encode(self, dataset):
        encoded = encode_platform(dataset, 32)
        assert len(encoded) == 3
        assert encoded.features.shape == (3, 32)
        assert encoded.labels.tolist() == [1, 0, 0]

    def test_subset_keeps_rows(self, dataset):
        encoded = encode_platform(dataset, 32)
        sub = encoded.subset([2, 0])
        assert sub.labels.tolist() == [0, 1]
        assert (sub.features[1] != encoded.features[0]).nnz == 0

    def test_encode_empty_platform(self):
        encoded = encode_platform(PlatformDataset("none", []), 32)
        assert len(encoded) == 0
        assert encoded.features.shape == (0, 32)
        assert encoded.labels.shape == (0,)

    def test_merge_order(self, dataset):
        a = encode_platform(dataset, 32)
        b = encode_platform(dataset.select([0]), 32)
        merged = merge_platforms([b, a])
        assert merged.labels.tolist() == [1, 1, 0, 0]
        assert merged.features.shape == (4, 32)

    def test_merge_empty(self):
        with pytest.raises(ValueError):
            merge_platforms([])
