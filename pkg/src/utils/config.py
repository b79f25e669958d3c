"""
Run configuration: a flat YAML mapping of settings, a named preset underneath
it and command-line overrides on top.

Precedence, lowest first: RunConfig defaults, preset, config file, flags.
A manifest.json written by a training run is accepted as a config file.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import yaml

from src.model.classifier import ModelSpec
from src.training.trainers import ALGORITHMS, TrainConfig
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

EVAL_MODES = ("cross", "in", "validation")

PRESETS = {
    "desk": {
        "hash_buckets": 2 ** 15,
        "hidden1": 64,
        "hidden2": 32,
        "inner_lr": 0.05,
        "meta_lr": 0.05,
        "temperature": 0.05,
        "batch_size": 8,
        "epochs": 10,
    },
    "reference": {
        "hash_buckets": 2 ** 15,
        "hidden1": 64,
        "hidden2": 32,
        "inner_lr": 5e-6,
        "meta_lr": 0.05,
        "temperature": 0.05,
        "batch_size": 8,
        "epochs": 10,
    },
    # desk settings on a narrower hash space for the synthetic multi-seed comparison
    "benchmark": {
        "hash_buckets": 2 ** 12,
        "hidden1": 64,
        "hidden2": 32,
        "inner_lr": 0.05,
        "meta_lr": 0.05,
        "temperature": 0.05,
        "batch_size": 8,
        "epochs": 10,
    },
}

DEFAULT_LOGGING = {
    "level": "INFO",
    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    "file": "pipeline.log",
}

_LIST_KEYS = ("train_platforms", "test_platforms", "cosine_alphas")


@dataclass
class RunConfig:
    algorithm: str = "scl-fish"
    preset: str = "desk"
    # model
    hash_buckets: int = 2 ** 15
    hidden1: int = 64
    hidden2: int = 32
    # optimisation
    inner_lr: float = 0.05
    meta_lr: float = 0.05
    scl_lr: Optional[float] = None  # follows inner_lr when unset
    temperature: float = 0.05
    gip_scale: float = 0.0
    batch_size: int = 8
    epochs: int = 10
    seed: int = 0
    meta_sign: float = 1.0
    # data and roles
    data: Optional[str] = None
    out: str = "runs/latest"
    train_platforms: List[str] = field(default_factory=list)
    val_platform: Optional[str] = None
    test_platforms: Optional[List[str]] = None
    # evaluation
    mode: str = "cross"
    balanced: bool = False
    checkpoint: Optional[str] = None
    # diagnostics
    emit_gip_trace: bool = False
    gip_probe_size: int = 64
    gip_trace_every: int = 1
    cosine_toy: str = "logistic"
    cosine_alphas: List[float] = field(default_factory=lambda: [1e-2, 1e-3, 1e-4])

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; expected one of {', '.join(PRESETS)}")
        if self.mode not in EVAL_MODES:
            raise ConfigError(f"unknown evaluation mode {self.mode!r}; expected one of {', '.join(EVAL_MODES)}")
        if self.gip_probe_size < 1 or self.gip_trace_every < 1:
            raise ConfigError("gip_probe_size and gip_trace_every must be positive")
        self.model_spec()
        self.train_config()
        return self

    def model_spec(self) -> ModelSpec:
        try:
            return ModelSpec(hash_buckets=int(self.hash_buckets), hidden1=int(self.hidden1), hidden2=int(self.hidden2))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid model dimensions: {exc}") from exc

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(
                inner_lr=float(self.inner_lr),
                meta_lr=float(self.meta_lr),
                scl_lr=None if self.scl_lr is None else float(self.scl_lr),
                temperature=float(self.temperature),
                gip_scale=float(self.gip_scale),
                batch_size=int(self.batch_size),
                epochs=int(self.epochs),
                seed=int(self.seed),
                meta_sign=float(self.meta_sign),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid training settings: {exc}") from exc

    def to_dict(self):
        return asdict(self)


def _split_list(value):
    if value is None or isinstance(value, list):
        return value
    if isinstance(value, tuple):
        return list(value)
    text = str(value).strip()
    if not text:
        return []
    return [part.strip() for part in text.split(",") if part.strip()]


_INT_KEYS = ("hash_buckets", "hidden1", "hidden2", "batch_size", "epochs", "seed", "gip_probe_size", "gip_trace_every")
_FLOAT_KEYS = ("inner_lr", "meta_lr", "scl_lr", "temperature", "gip_scale", "meta_sign")


def _coerce(values):
    # PyYAML reads 1e-3 (no dot) as a string
    try:
        for key in _INT_KEYS:
            if values.get(key) is not None:
                values[key] = int(values[key])
        for key in _FLOAT_KEYS:
            if values.get(key) is not None:
                values[key] = float(values[key])
        if values.get("cosine_alphas") is not None:
            values["cosine_alphas"] = [float(a) for a in values["cosine_alphas"]]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid numeric setting: {exc}") from exc
    return values


def parse_overrides(pairs) -> dict:
    """['key=value', ...] -> {key: YAML-typed value}"""
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        try:
            overrides[key.strip()] = yaml.safe_load(value) if value.strip() else None
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse value of {key}: {exc}") from exc
    return overrides


def read_config_file(path) -> dict:
    """Mapping from a YAML config or the config section of a run manifest"""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            if str(path).endswith(".json"):
                values = json.load(f)
            else:
                values = yaml.safe_load(f) or {}
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"{path}: expected a mapping of settings")
    if "config" in values and isinstance(values["config"], dict):
        logger.info(f"Re-using the resolved configuration of manifest {path}")
        values = dict(values["config"])
    return values


def load_run_config(path=None, preset=None, overrides=None):
    """
    Resolve a RunConfig.

    Returns (RunConfig, logging settings). The `logging` section of the file
    is the only nested mapping and configures the CLI's handlers.
    """
    file_values = read_config_file(path) if path else {}
    logging_settings = dict(DEFAULT_LOGGING)
    logging_settings.update(file_values.pop("logging", None) or {})

    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    chosen = overrides.get("preset") or preset or file_values.get("preset") or "desk"
    if chosen not in PRESETS:
        raise ConfigError(f"unknown preset {chosen!r}; expected one of {', '.join(PRESETS)}")

    values = dict(PRESETS[chosen])
    values.update(file_values)
    values.update(overrides)
    values["preset"] = chosen

    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    for key in _LIST_KEYS:
        if key in values:
            values[key] = _split_list(values[key])
    values = _coerce(values)

    config = RunConfig(**values).validate()
    logger.debug(f"Resolved configuration: {config.to_dict()}")
    return config, logging_settings
