"""
Shared fixtures: tiny models, random sparse batches and a small synthetic corpus
"""

import numpy as np
import pytest
from scipy import sparse
from sklearn.preprocessing import normalize

from src.model.classifier import ModelSpec, init_params
from src.preprocessing.data_loader import save_jsonl
from src.preprocessing.synthetic import SynthConfig, generate_synthetic


@pytest.fixture
def tiny_spec():
    return ModelSpec(hash_buckets=8, hidden1=5, hidden2=4)


@pytest.fixture
def tiny_params(tiny_spec):
    return init_params(tiny_spec, seed=11)


def random_batch(spec, n, seed):
    """L2-normalized sparse count rows and labels containing both classes"""
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, 3, size=(n, spec.hash_buckets)) * (rng.random((n, spec.hash_buckets)) < 0.5)
    features = normalize(sparse.csr_matrix(counts.astype(np.float64)), norm="l2", axis=1)
    labels = np.arange(n) % 2
    rng.shuffle(labels)
    return features, labels


@pytest.fixture
def batch(tiny_spec):
    return random_batch(tiny_spec, 6, seed=5)


@pytest.fixture
def tiny_synth_config():
    return SynthConfig(seed=3, samples_per_platform=60, task_vocab=20, spurious_vocab=4)


@pytest.fixture
def tiny_corpus(tiny_synth_config):
    return generate_synthetic(tiny_synth_config)


@pytest.fixture
def corpus_file(tmp_path, tiny_corpus):
    path = tmp_path / "corpus.jsonl"
    save_jsonl(tiny_corpus, path)
    return path


@pytest.fixture
def make_batch():
    return random_batch
