"""
Synthetic Multi-Platform Corpus Generator

Every document carries a bag of shared task words whose label dependence is the
same on all platforms, and possibly a handful of platform spurious words whose
presence correlates with the label at a configured rho. Training platforms own
disjoint spurious vocabularies; held-out platforms (validation, test) draw from
the union of them, so a reversed rho there contradicts what pooled training
can pick up from the spurious words.
"""

import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional

import numpy as np
import yaml

from src.preprocessing.data_loader import Example, PlatformDataset
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class SynthConfig:
    seed: int = 0
    samples_per_platform: int = 2000
    abusive_rate: float = 0.5
    task_vocab: int = 200
    spurious_vocab: int = 20
    task_words_per_doc: int = 10
    spurious_words_per_doc: int = 3
    task_signal: float = 0.7
    train_platforms: List[str] = field(default_factory=lambda: ["synth-a", "synth-b", "synth-c"])
    validation_platform: Optional[str] = "synth-val"
    test_platforms: List[str] = field(default_factory=lambda: ["synth-test"])
    train_rho: float = 0.9
    validation_rho: float = 0.0
    test_rho: float = -0.9
    rho: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("samples_per_platform", "task_vocab", "spurious_vocab", "task_words_per_doc"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.spurious_words_per_doc < 0 or self.seed < 0:
            raise ConfigError("spurious_words_per_doc and seed must be non-negative")
        if self.task_vocab < 2:
            raise ConfigError("task_vocab must be at least 2 (one abusive-leaning and one normal-leaning word)")
        if not 0.0 < self.abusive_rate < 1.0:
            raise ConfigError(f"abusive_rate must lie in (0, 1), got {self.abusive_rate}")
        if not 0.0 <= self.task_signal <= 1.0:
            raise ConfigError(f"task_signal must lie in [0, 1], got {self.task_signal}")
        if not self.train_platforms:
            raise ConfigError("at least one training platform is required")

        names = self.platform_names()
        if len(set(names)) != len(names) or not all(names):
            raise ConfigError(f"platform names must be unique and non-empty: {names}")
        unknown = set(self.rho) - set(names)
        if unknown:
            raise ConfigError(f"rho given for unknown platform(s): {sorted(unknown)}")
        for name in names:
            value = self.rho_of(name)
            if not -1.0 <= value <= 1.0:
                raise ConfigError(f"rho of {name} must lie in [-1, 1], got {value}")

    def platform_names(self):
        held_out = [self.validation_platform] if self.validation_platform else []
        return list(self.train_platforms) + held_out + list(self.test_platforms)

    def rho_of(self, platform):
        if platform in self.rho:
            return float(self.rho[platform])
        if platform in self.train_platforms:
            return float(self.train_rho)
        if platform == self.validation_platform:
            return float(self.validation_rho)
        return float(self.test_rho)

    def to_dict(self):
        return asdict(self)


@dataclass
class SyntheticPlatform:
    name: str
    rho: float
    spurious_words: List[str]
    held_out: bool


def task_words(cfg: SynthConfig):
    """(abusive-leaning, normal-leaning) halves of the shared task vocabulary"""
    words = [f"task{i}" for i in range(cfg.task_vocab)]
    half = cfg.task_vocab // 2
    return words[:half], words[half:]


def spurious_words(cfg: SynthConfig, index: int):
    return [f"spur{index}w{j}" for j in range(cfg.spurious_vocab)]


def build_platforms(cfg: SynthConfig) -> List[SyntheticPlatform]:
    platforms = []
    for k, name in enumerate(cfg.train_platforms):
        platforms.append(SyntheticPlatform(name, cfg.rho_of(name), spurious_words(cfg, k), held_out=False))
    union = [w for k in range(len(cfg.train_platforms)) for w in spurious_words(cfg, k)]
    for name in cfg.platform_names()[len(cfg.train_platforms):]:
        platforms.append(SyntheticPlatform(name, cfg.rho_of(name), union, held_out=True))
    return platforms


def _spurious_presence(rng, label, rho, base_rate):
    # correlation with the label is exactly rho when P(s=1) matches P(y=1)
    if rho >= 0:
        if rng.random() < rho:
            return label
        return int(rng.random() < base_rate)
    if rng.random() < -rho:
        return 1 - label
    return int(rng.random() < 1.0 - base_rate)


def _generate_platform(cfg, platform, index, abusive_words, normal_words):
    rng = np.random.default_rng([cfg.seed, index])
    examples = []
    for _ in range(cfg.samples_per_platform):
        label = int(rng.random() < cfg.abusive_rate)
        leaning, other = (abusive_words, normal_words) if label == 1 else (normal_words, abusive_words)

        tokens = []
        for _ in range(cfg.task_words_per_doc):
            pool = leaning if rng.random() < cfg.task_signal else other
            tokens.append(pool[rng.integers(len(pool))])

        if _spurious_presence(rng, label, platform.rho, cfg.abusive_rate):
            picks = rng.integers(len(platform.spurious_words), size=cfg.spurious_words_per_doc)
            tokens.extend(platform.spurious_words[i] for i in picks)

        order = rng.permutation(len(tokens))
        examples.append(Example(text=" ".join(tokens[i] for i in order), label=label, platform=platform.name))
    return PlatformDataset(platform.name, examples)


def generate_synthetic(cfg: SynthConfig) -> List[PlatformDataset]:
    """Generate one PlatformDataset per configured platform, training platforms first"""
    cfg.validate()
    abusive_words, normal_words = task_words(cfg)
    datasets = []
    for index, platform in enumerate(build_platforms(cfg)):
        dataset = _generate_platform(cfg, platform, index, abusive_words, normal_words)
        counts = dataset.class_counts
        logger.info(
            f"Generated {platform.name} (rho={platform.rho:+.2f}): "
            f"{counts[1]} abusive / {counts[0]} normal"
        )
        datasets.append(dataset)
    return datasets


def spurious_presence(dataset: PlatformDataset, cfg: SynthConfig) -> np.ndarray:
    """1 where a document contains any spurious word"""
    return np.asarray(
        [int(any(token.startswith("spur") for token in e.text.split())) for e in dataset.examples],
        dtype=np.int64,
    )


def load_synth_config(path=None, overrides=None) -> SynthConfig:
    """SynthConfig from a YAML mapping; unknown keys are rejected"""
    values = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                values = yaml.safe_load(f) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read synthetic config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError(f"{path}: expected a mapping of settings")
    values.update(overrides or {})

    known = {f.name for f in fields(SynthConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown synthetic config key(s): {', '.join(unknown)}")
    try:
        return SynthConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid synthetic config: {exc}") from exc
