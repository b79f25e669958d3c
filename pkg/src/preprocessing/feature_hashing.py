"""
Feature Hashing Module for Cross-Platform Abusive Language Detection

Text is lowercased, split on every non-alphanumeric character and each token
is hashed with 64-bit FNV-1a over its UTF-8 bytes. Bucket = hash mod V.
The scheme is bit-specified so any implementation reproduces the same features.
"""

import logging
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from sklearn.preprocessing import normalize

logger = logging.getLogger(__name__)

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK_64 = 0xFFFFFFFFFFFFFFFF

# letters and digits of any script; underscore counts as a separator
_TOKEN_PATTERN = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class FeatureVector:
    """Sparse (index, count) pairs over V hash buckets, indices strictly increasing"""

    indices: tuple
    counts: tuple
    buckets: int

    def __len__(self):
        return len(self.indices)

    def as_dict(self):
        return dict(zip(self.indices, self.counts))


@dataclass
class EncodedPlatform:
    """Hashed, L2-normalized design matrix of one platform ready for the model"""

    platform: str
    features: sparse.csr_matrix
    labels: np.ndarray

    def __len__(self):
        return self.features.shape[0]

    def subset(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        return EncodedPlatform(self.platform, self.features[rows], self.labels[rows])


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string"""
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK_64
    return h


def tokenize(text: str):
    """Lowercase and split on non-alphanumeric characters, dropping empty tokens"""
    return _TOKEN_PATTERN.findall(text.lower())


def hash_features(text: str, buckets: int) -> FeatureVector:
    """Hash a document into a sparse bag-of-buckets count vector"""
    if buckets < 1:
        raise ValueError(f"number of hash buckets must be positive, got {buckets}")

    counts = Counter(fnv1a_64(token.encode("utf-8")) % buckets for token in tokenize(text))
    indices = tuple(sorted(counts))
    return FeatureVector(indices=indices, counts=tuple(counts[i] for i in indices), buckets=buckets)


def features_to_matrix(features: Sequence[FeatureVector], buckets: int) -> sparse.csr_matrix:
    """Stack feature vectors into an L2-row-normalized CSR matrix (zero rows stay zero)"""
    if len(features) == 0:
        return sparse.csr_matrix((0, buckets), dtype=np.float64)

    indptr = [0]
    indices = []
    data = []
    for fv in features:
        indices.extend(fv.indices)
        data.extend(fv.counts)
        indptr.append(len(indices))

    counts = sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(features), buckets),
    )
    return normalize(counts, norm="l2", axis=1, copy=False)


def encode_platform(dataset, buckets: int) -> EncodedPlatform:
    """Hash every example of a PlatformDataset"""
    features = [hash_features(example.text, buckets) for example in dataset.examples]
    labels = np.asarray([example.label for example in dataset.examples], dtype=np.int64)
    logger.debug(f"Encoded {len(features)} examples of {dataset.platform} into {buckets} buckets")
    return EncodedPlatform(dataset.platform, features_to_matrix(features, buckets), labels)


def encode_platforms(datasets, buckets: int):
    return [encode_platform(dataset, buckets) for dataset in datasets]


def merge_platforms(encoded: Sequence[EncodedPlatform], name="merged") -> EncodedPlatform:
    """Concatenate platforms in the given order"""
    if not encoded:
        raise ValueError("cannot merge an empty platform list")
    features = sparse.vstack([p.features for p in encoded], format="csr")
    labels = np.concatenate([p.labels for p in encoded])
    return EncodedPlatform(name, features, labels)
