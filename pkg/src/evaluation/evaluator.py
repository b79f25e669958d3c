"""
Model Evaluation Module for Cross-Platform Abusive Language Detection
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
import pandas as pd

from src.evaluation.metrics import confusion, metrics
from src.model.classifier import ModelSpec, ParamVector, forward_batch, predict
from src.preprocessing.data_loader import PlatformDataset, balanced_subsample
from src.preprocessing.feature_hashing import EncodedPlatform, encode_platform
from src.utils.errors import DataError

logger = logging.getLogger(__name__)

REPORT_FIELDS = ["platform", "n", "accuracy", "positive_f1", "macro_f1"]
AGGREGATE_NAME = "avg"


@dataclass
class MetricsReport:
    """Per-platform rows in the configured order plus their unweighted mean"""

    mode: str
    rows: List[dict] = field(default_factory=list)

    @property
    def aggregate(self):
        if not self.rows:
            raise ValueError("report has no platform rows")
        row = {"platform": AGGREGATE_NAME, "n": int(sum(r["n"] for r in self.rows))}
        for key in ("accuracy", "positive_f1", "negative_f1", "macro_f1"):
            row[key] = float(np.mean([r[key] for r in self.rows]))
        return row

    def row(self, platform):
        for r in self.rows:
            if r["platform"] == platform:
                return r
        raise KeyError(platform)

    def to_dict(self):
        """Serialized document: only the documented fields"""
        return {
            "mode": self.mode,
            "platforms": [{k: r[k] for k in REPORT_FIELDS} for r in self.rows],
            "aggregate": {k: self.aggregate[k] for k in REPORT_FIELDS},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows + [self.aggregate], columns=REPORT_FIELDS + ["negative_f1"])

    def save(self, path):
        directory = os.path.dirname(os.fspath(path))
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json() + "\n")
        logger.info(f"Metrics report saved to {path}")


def platform_row(params: ParamVector, spec: ModelSpec, platform: EncodedPlatform) -> dict:
    if len(platform) == 0:
        raise DataError(f"platform {platform.platform} has no examples to evaluate")
    result = metrics(confusion(predict(params, spec, platform.features), platform.labels))
    return {
        "platform": platform.platform,
        "n": len(platform),
        "accuracy": result.accuracy,
        "positive_f1": result.positive_f1,
        "negative_f1": result.negative_f1,
        "macro_f1": result.macro_f1,
    }


def evaluate_encoded(params: ParamVector, spec: ModelSpec, platforms: Sequence[EncodedPlatform], mode="cross"):
    report = MetricsReport(mode=mode, rows=[platform_row(params, spec, p) for p in platforms])
    for r in report.rows:
        logger.info(
            f"  {r['platform']}: n={r['n']} accuracy={r['accuracy']:.4f} "
            f"positive_f1={r['positive_f1']:.4f} macro_f1={r['macro_f1']:.4f}"
        )
    return report


def evaluate(
    params: ParamVector,
    spec: ModelSpec,
    datasets: Sequence[PlatformDataset],
    mode: str = "cross",
    balanced: bool = False,
    seed: int = 0,
) -> MetricsReport:
    """
    Argmax predictions on every platform.

    balanced=True downsamples each platform to equal class counts (seeded) first;
    the report mode then reads e.g. "cross-balanced".
    """
    if not datasets:
        raise DataError("no platforms to evaluate")
    if balanced:
        datasets = [balanced_subsample(d, seed) for d in datasets]
        mode = f"{mode}-balanced"
    logger.info(f"Evaluating {len(datasets)} platform(s) in {mode} mode")
    encoded = [encode_platform(d, spec.hash_buckets) for d in datasets]
    return evaluate_encoded(params, spec, encoded, mode)


def embedding_frame(params: ParamVector, spec: ModelSpec, datasets: Sequence[PlatformDataset]) -> pd.DataFrame:
    columns = ["platform", "label"] + [f"e_{k}" for k in range(spec.embedding_dim)]
    frames = []
    for dataset in datasets:
        encoded = encode_platform(dataset, spec.hash_buckets)
        if len(encoded) == 0:
            continue
        frame = pd.DataFrame(forward_batch(params, spec, encoded.features).embeddings, columns=columns[2:])
        frame.insert(0, "label", encoded.labels)
        frame.insert(0, "platform", dataset.platform)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)


def export_embeddings(params: ParamVector, spec: ModelSpec, datasets: Sequence[PlatformDataset], path) -> pd.DataFrame:
    """Write embeddings f(x) as CSV: platform,label,e_0..e_{D-1}, 17 significant digits"""
    frame = embedding_frame(params, spec, datasets)
    try:
        directory = os.path.dirname(os.fspath(path))
        if directory:
            os.makedirs(directory, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.17g")
    except OSError as exc:
        raise DataError(f"cannot write embeddings to {path}: {exc}") from exc
    logger.info(f"Exported {len(frame)} embeddings of dimension {spec.embedding_dim} to {path}")
    return frame
