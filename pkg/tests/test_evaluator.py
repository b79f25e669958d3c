"""
Unit tests for per-platform evaluation reports and embedding export
"""

import json

import numpy as np
import pandas as pd
import pytest

from src.evaluation.evaluator import REPORT_FIELDS, MetricsReport, embedding_frame, evaluate, export_embeddings
from src.model.classifier import ModelSpec, forward_batch, pack_params
from src.preprocessing.data_loader import Example, PlatformDataset
from src.preprocessing.feature_hashing import encode_platform, hash_features
from src.utils.errors import DataError


def row(platform, n, accuracy, positive_f1, macro_f1):
    return {
        "platform": platform,
        "n": n,
        "accuracy": accuracy,
        "positive_f1": positive_f1,
        "negative_f1": 2 * macro_f1 - positive_f1,
        "macro_f1": macro_f1,
    }


@pytest.fixture
def keyword_model():
    """Predicts abusive exactly when the bucket of 'idiot' is present"""
    buckets = 1 << 16
    bucket = hash_features("idiot", buckets).indices[0]
    spec = ModelSpec(hash_buckets=buckets, hidden1=1, hidden2=1)
    w1 = np.zeros((1, buckets))
    w1[0, bucket] = 5.0
    params = pack_params(
        spec,
        W1=w1,
        b1=np.zeros(1),
        W2=np.array([[5.0]]),
        b2=np.zeros(1),
        W3=np.array([[-1.0], [1.0]]),
        b3=np.array([0.1, -0.1]),
    )
    return params, spec


def platform(name, texts_and_labels):
    return PlatformDataset(name, [Example(text, label, name) for text, label in texts_and_labels])


class TestMetricsReport:
    def test_aggregate_is_unweighted_mean(self):
        report = MetricsReport("cross", [row("a", 10, 0.5, 0.4, 0.45), row("b", 30, 0.9, 0.8, 0.85)])
        aggregate = report.aggregate
        assert aggregate["platform"] == "avg"
        assert aggregate["n"] == 40
        assert aggregate["accuracy"] == pytest.approx(0.7)
        assert aggregate["macro_f1"] == pytest.approx(0.65)

    def test_schema(self, tmp_path):
        report = MetricsReport("in", [row("a", 4, 1.0, 1.0, 1.0)])
        path = tmp_path / "m" / "metrics.json"
        report.save(path)
        document = json.loads(path.read_text(encoding="utf-8"))
        assert set(document) == {"mode", "platforms", "aggregate"}
        assert list(document["platforms"][0]) == REPORT_FIELDS
        assert list(document["aggregate"]) == REPORT_FIELDS

    def test_frame_has_aggregate_last(self):
        frame = MetricsReport("cross", [row("a", 1, 1.0, 1.0, 1.0), row("b", 1, 0.0, 0.0, 0.0)]).to_frame()
        assert frame["platform"].tolist() == ["a", "b", "avg"]

    def test_lookup(self):
        report = MetricsReport("cross", [row("a", 1, 1.0, 1.0, 1.0)])
        assert report.row("a")["n"] == 1
        with pytest.raises(KeyError):
            report.row("b")


class TestEvaluate:
    """End-to-end scoring of a hand-built model"""

    def test_perfect_model(self, keyword_model):
        params, spec = keyword_model
        data = [
            platform("x", [("you idiot", 1), ("hello there", 0), ("IDIOT!", 1)]),
            platform("y", [("nice", 0), ("what an idiot", 1)]),
        ]
        report = evaluate(params, spec, data)
        assert report.mode == "cross"
        assert [r["platform"] for r in report.rows] == ["x", "y"]
        assert report.aggregate["accuracy"] == 1.0
        assert report.aggregate["macro_f1"] == 1.0

    def test_balanced_mode(self, keyword_model):
        params, spec = keyword_model
        data = [platform("x", [("idiot", 1)] * 6 + [("hello", 0)] * 2)]
        first = evaluate(params, spec, data, balanced=True, seed=3)
        second = evaluate(params, spec, data, balanced=True, seed=3)
        assert first.mode == "cross-balanced"
        assert first.rows[0]["n"] == 4
        assert first.to_dict() == second.to_dict()

    def test_no_platforms(self, keyword_model):
        params, spec = keyword_model
        with pytest.raises(DataError):
            evaluate(params, spec, [])

    def test_empty_platform(self, keyword_model):
        params, spec = keyword_model
        with pytest.raises(DataError):
            evaluate(params, spec, [PlatformDataset("x", [])])


class TestEmbeddingExport:
    def test_frame_shape(self, tiny_corpus, tiny_spec, tiny_params):
        frame = embedding_frame(tiny_params, tiny_spec, tiny_corpus[:2])
        assert list(frame.columns) == ["platform", "label"] + [f"e_{k}" for k in range(tiny_spec.embedding_dim)]
        assert len(frame) == len(tiny_corpus[0]) + len(tiny_corpus[1])

    def test_empty_platform_skipped(self, tiny_corpus, tiny_spec, tiny_params):
        frame = embedding_frame(tiny_params, tiny_spec, [PlatformDataset("none", []), tiny_corpus[0]])
        assert len(frame) == len(tiny_corpus[0])
        assert set(frame["platform"]) == {tiny_corpus[0].platform}

    def test_csv_values_parse_back(self, tmp_path, tiny_corpus, tiny_spec, tiny_params):
        path = tmp_path / "emb" / "embeddings.csv"
        export_embeddings(tiny_params, tiny_spec, tiny_corpus[:1], path)
        loaded = pd.read_csv(path, float_precision="round_trip")

        encoded = encode_platform(tiny_corpus[0], tiny_spec.hash_buckets)
        expected = forward_batch(tiny_params, tiny_spec, encoded.features).embeddings
        values = loaded[[f"e_{k}" for k in range(tiny_spec.embedding_dim)]].to_numpy()
        assert np.allclose(values, expected, rtol=0, atol=1e-15)
        assert loaded["label"].tolist() == encoded.labels.tolist()
        assert set(loaded["platform"]) == {tiny_corpus[0].platform}

    def test_unwritable_path(self, tmp_path, tiny_corpus, tiny_spec, tiny_params):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        with pytest.raises(DataError):
            export_embeddings(tiny_params, tiny_spec, tiny_corpus[:1], blocker / "embeddings.csv")
