"""
Training Run Module for Cross-Platform Abusive Language Detection

Runs one algorithm on the training platforms, evaluates the validation
platform after every epoch, keeps the checkpoint with the best validation
macro-F1 (ties go to the earliest epoch) and writes the run artifacts.
"""

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from datetime import datetime
from typing import List, Optional

import numpy as np
import pandas as pd

from src import __version__
from src.evaluation.evaluator import evaluate_encoded
from src.model.checkpoint import save_params
from src.model.classifier import ParamVector, clone_params
from src.preprocessing.data_loader import load_jsonl
from src.preprocessing.feature_hashing import encode_platform, encode_platforms
from src.preprocessing.splits import SplitPlan, make_splits
from src.training.diagnostics import GradientAlignmentProbe
from src.training.trainers import DomainBatchSchedule, TrainState, run_epoch
from src.utils.config import RunConfig
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "accuracy", "positive_f1", "macro_f1"]


@dataclass
class TrainResult:
    best_params: ParamVector
    final_params: ParamVector
    best_epoch: int
    best_score: Optional[float]
    history: pd.DataFrame
    trace: List[dict] = field(default_factory=list)
    loss_trace: List[float] = field(default_factory=list)


def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class CrossPlatformTrainer:
    """Training run driven by a RunConfig"""

    def __init__(self, config: RunConfig, out_dir=None):
        self.config = config
        self.out_dir = out_dir or config.out
        self.spec = config.model_spec()
        self.train_cfg = config.train_config()
        self.timings = {}

    def load_data(self):
        if not self.config.data:
            raise ConfigError("no data file given (set `data` in the config or pass --data)")
        start = time.perf_counter()
        datasets = load_jsonl(self.config.data)
        self.timings["load_s"] = time.perf_counter() - start
        return datasets

    def make_plan(self, datasets) -> SplitPlan:
        if not self.config.train_platforms:
            raise ConfigError("no training platforms configured (train_platforms / --train-platforms)")
        return make_splits(
            datasets, self.config.train_platforms, self.config.val_platform, self.config.test_platforms
        )

    def train(self, plan: SplitPlan) -> TrainResult:
        """Train for cfg.epochs epochs with validation-based selection; writes nothing"""
        cfg, spec = self.train_cfg, self.spec
        algorithm = self.config.algorithm
        train_encoded = encode_platforms(plan.train, spec.hash_buckets)
        val_encoded = None if plan.validation is None else encode_platform(plan.validation, spec.hash_buckets)
        if val_encoded is None:
            logger.warning("No validation platform: the final epoch is selected")

        state = TrainState.create(spec, cfg)
        schedule = None
        if algorithm in ("fish", "scl-fish"):
            schedule = DomainBatchSchedule(train_encoded, cfg.batch_size, cfg.seed)
        probe = None
        if self.config.emit_gip_trace:
            if len(train_encoded) < 2:
                logger.warning("G_hat trace needs at least 2 training platforms; disabled")
            else:
                probe = GradientAlignmentProbe(
                    train_encoded, spec, self.config.gip_probe_size, cfg.seed, every=self.config.gip_trace_every
                )

        logger.info(
            f"Training {algorithm} on {plan.train_names} for {cfg.epochs} epochs "
            f"({spec.param_count} parameters, seed {cfg.seed})"
        )
        start = time.perf_counter()
        history = []
        best_params, best_epoch, best_score = None, 0, None
        for epoch in range(cfg.epochs):
            run_epoch(algorithm, state, train_encoded, cfg, schedule=schedule, probe=probe)
            if val_encoded is None:
                best_params, best_epoch = clone_params(state.params), epoch
                continue

            row = evaluate_encoded(state.params, spec, [val_encoded], mode="validation").rows[0]
            history.append({"epoch": epoch, **{k: row[k] for k in HISTORY_COLUMNS[1:]}})
            logger.info(f"Epoch {epoch + 1}/{cfg.epochs}: validation macro-F1 {row['macro_f1']:.4f}")
            # strict improvement keeps the earliest epoch on ties
            if best_score is None or row["macro_f1"] > best_score:
                best_params, best_epoch, best_score = clone_params(state.params), epoch, row["macro_f1"]

        self.timings["train_s"] = time.perf_counter() - start
        logger.info(f"Selected epoch {best_epoch + 1} (validation macro-F1 {best_score})")
        return TrainResult(
            best_params=best_params,
            final_params=clone_params(state.params),
            best_epoch=best_epoch,
            best_score=best_score,
            history=pd.DataFrame(history, columns=HISTORY_COLUMNS),
            trace=state.trace,
            loss_trace=state.loss_trace,
        )

    def manifest(self, result: TrainResult, plan: SplitPlan, started_at):
        data_hash = file_sha256(self.config.data) if self.config.data and os.path.exists(self.config.data) else None
        return {
            "config": self.config.to_dict(),
            "seed": self.train_cfg.seed,
            "version": __version__,
            "splits": plan.as_dict(),
            "data_sha256": data_hash,
            "started_at": started_at,
            "finished_at": datetime.now().isoformat(timespec="seconds"),
            "timings": {k: round(v, 3) for k, v in self.timings.items()},
            "selected_epoch": result.best_epoch,
            "best_validation_macro_f1": result.best_score,
            "epoch_losses": result.loss_trace,
        }

    def save_artifacts(self, result: TrainResult, plan: SplitPlan, started_at):
        out = self.out_dir
        os.makedirs(out, exist_ok=True)
        save_params(result.best_params, self.spec, os.path.join(out, "best.ckpt"))
        save_params(result.final_params, self.spec, os.path.join(out, "final.ckpt"))

        with open(os.path.join(out, "trace.jsonl"), "w", encoding="utf-8") as f:
            for record in result.trace:
                f.write(json.dumps(record) + "\n")
        result.history.to_csv(os.path.join(out, "validation_history.csv"), index=False, float_format="%.17g")

        with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as f:
            json.dump(self.manifest(result, plan, started_at), f, indent=2)
        logger.info(f"Run artifacts written to {out}")

    def run(self):
        """Load, split, train and persist; returns (TrainResult, SplitPlan)"""
        started_at = datetime.now().isoformat(timespec="seconds")
        plan = self.make_plan(self.load_data())
        result = self.train(plan)
        self.save_artifacts(result, plan, started_at)
        return result, plan


def training_accuracy(params: ParamVector, trainer: CrossPlatformTrainer, plan: SplitPlan) -> float:
    """Mean in-platform accuracy over the training platforms"""
    encoded = encode_platforms(plan.train, trainer.spec.hash_buckets)
    report = evaluate_encoded(params, trainer.spec, encoded, mode="in")
    return float(np.mean([r["accuracy"] for r in report.rows]))
