"""
Dataset Loading Module for Cross-Platform Abusive Language Detection

Corpora are JSONL files, one object per line with the fields
text (string), label (0 = normal, 1 = abusive) and platform (string).
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from src.utils.errors import DataError, DataFormatError

logger = logging.getLogger(__name__)

LABELS = (0, 1)
LABEL_NAMES = {0: "normal", 1: "abusive"}


@dataclass(frozen=True)
class Example:
    text: str
    label: int
    platform: str

    def __post_init__(self):
        if not isinstance(self.platform, str) or not self.platform:
            raise ValueError("platform must be a non-empty string")
        if self.label not in LABELS:
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")

    def to_record(self):
        return {"text": self.text, "label": self.label, "platform": self.platform}


@dataclass
class PlatformDataset:
    """All examples of one platform in file order"""

    platform: str
    examples: List[Example] = field(default_factory=list)

    def __post_init__(self):
        for example in self.examples:
            if example.platform != self.platform:
                raise ValueError(f"example from {example.platform} placed in platform {self.platform}")

    def __len__(self):
        return len(self.examples)

    @property
    def labels(self):
        return np.asarray([e.label for e in self.examples], dtype=np.int64)

    @property
    def class_counts(self) -> Dict[int, int]:
        labels = self.labels
        return {label: int((labels == label).sum()) for label in LABELS}

    def select(self, rows):
        return PlatformDataset(self.platform, [self.examples[int(i)] for i in rows])


def _parse_record(line, line_number):
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"malformed JSON ({exc.msg})", line_number) from exc
    if not isinstance(record, dict):
        raise DataFormatError("record must be a JSON object", line_number)

    for key in ("text", "label", "platform"):
        if key not in record:
            raise DataFormatError(f"missing field {key!r}", line_number)

    text, label, platform = record["text"], record["label"], record["platform"]
    if not isinstance(text, str):
        raise DataFormatError("field 'text' must be a string", line_number)
    # bool is an int subclass; true/false are not labels
    if isinstance(label, bool) or not isinstance(label, int) or label not in LABELS:
        raise DataFormatError(f"label must be 0 or 1, got {label!r}", line_number)
    if not isinstance(platform, str) or not platform:
        raise DataFormatError("field 'platform' must be a non-empty string", line_number)
    return Example(text=text, label=label, platform=platform)


def load_jsonl(path) -> List[PlatformDataset]:
    """Read a JSONL corpus and group it by platform, in order of first appearance"""
    logger.info(f"Loading data from {path}")
    if not os.path.exists(path):
        raise DataError(f"data file not found: {path}")

    grouped: Dict[str, List[Example]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            example = _parse_record(line, line_number)
            grouped.setdefault(example.platform, []).append(example)

    if not grouped:
        raise DataError(f"{path}: no examples")

    datasets = [PlatformDataset(platform, examples) for platform, examples in grouped.items()]
    summary = summarize_platforms(datasets)
    logger.info(f"Loaded {int(summary['n'].sum())} examples from {len(datasets)} platforms")
    for row in summary.itertuples(index=False):
        logger.info(f"  {row.platform}: {row.n} examples ({row.abusive} abusive / {row.normal} normal)")
        if row.abusive == 0 or row.normal == 0:
            logger.warning(f"Platform {row.platform} contains a single class")
    return datasets


def save_jsonl(datasets: Sequence[PlatformDataset], path) -> None:
    """Write datasets as canonical JSONL (keys text, label, platform; UTF-8)"""
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for dataset in datasets:
            for example in dataset.examples:
                f.write(json.dumps(example.to_record(), ensure_ascii=False) + "\n")
                count += 1
    logger.info(f"Wrote {count} examples to {path}")


def summarize_platforms(datasets: Sequence[PlatformDataset]) -> pd.DataFrame:
    """Per-platform class counts"""
    rows = []
    for dataset in datasets:
        counts = dataset.class_counts
        rows.append(
            {"platform": dataset.platform, "n": len(dataset), "abusive": counts[1], "normal": counts[0]}
        )
    return pd.DataFrame(rows, columns=["platform", "n", "abusive", "normal"])


def balanced_subsample(dataset: PlatformDataset, seed: int) -> PlatformDataset:
    """
    Downsample the majority class to the minority count.

    Kept examples stay in their original order; a balanced input is returned whole.
    """
    labels = dataset.labels
    positives = np.flatnonzero(labels == 1)
    negatives = np.flatnonzero(labels == 0)
    if positives.size == 0 or negatives.size == 0:
        raise DataError(f"platform {dataset.platform} lacks one class; cannot balance")

    target = min(positives.size, negatives.size)
    rng = np.random.default_rng(seed)
    keep = np.concatenate(
        [
            np.sort(rng.choice(positives, size=target, replace=False)),
            np.sort(rng.choice(negatives, size=target, replace=False)),
        ]
    )
    logger.debug(f"Balanced {dataset.platform}: {target} per class from {len(dataset)} examples")
    return dataset.select(np.sort(keep))
