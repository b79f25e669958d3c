"""
Multi-seed algorithm comparison on synthetic corpora.

Every (algorithm, seed) pair trains on a corpus generated with that seed,
selects its checkpoint on the validation platform and is scored on the
held-out test platforms and in-platform on the training platforms.
"""

import dataclasses
import logging
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
from joblib import Parallel, delayed  # noqa: E402

from src.evaluation.evaluator import evaluate_encoded  # noqa: E402
from src.preprocessing.feature_hashing import encode_platforms  # noqa: E402
from src.preprocessing.splits import make_splits  # noqa: E402
from src.preprocessing.synthetic import SynthConfig, generate_synthetic  # noqa: E402
from src.training.model_trainer import CrossPlatformTrainer, training_accuracy  # noqa: E402
from src.training.trainers import ALGORITHMS  # noqa: E402
from src.utils.config import RunConfig  # noqa: E402

logger = logging.getLogger(__name__)

RUN_COLUMNS = ["algorithm", "seed", "selected_epoch", "accuracy", "positive_f1", "macro_f1", "train_accuracy"]
SUMMARY_METRICS = ["accuracy", "positive_f1", "macro_f1", "train_accuracy"]


def benchmark_run(algorithm: str, seed: int, synth: SynthConfig, base: RunConfig) -> dict:
    """Train and score one (algorithm, seed) pair"""
    datasets = generate_synthetic(dataclasses.replace(synth, seed=seed))
    plan = make_splits(datasets, synth.train_platforms, synth.validation_platform, synth.test_platforms)
    config = dataclasses.replace(
        base,
        algorithm=algorithm,
        seed=seed,
        train_platforms=list(synth.train_platforms),
        val_platform=synth.validation_platform,
        test_platforms=list(synth.test_platforms),
    )
    trainer = CrossPlatformTrainer(config)
    result = trainer.train(plan)

    held_out = evaluate_encoded(
        result.best_params, trainer.spec, encode_platforms(plan.test, trainer.spec.hash_buckets), mode="cross"
    ).aggregate
    row = {
        "algorithm": algorithm,
        "seed": seed,
        "selected_epoch": result.best_epoch,
        "accuracy": held_out["accuracy"],
        "positive_f1": held_out["positive_f1"],
        "macro_f1": held_out["macro_f1"],
        "train_accuracy": training_accuracy(result.best_params, trainer, plan),
    }
    logger.info(f"{algorithm} seed {seed}: held-out macro-F1 {row['macro_f1']:.4f}")
    return row


def summarize(runs: pd.DataFrame) -> pd.DataFrame:
    """Mean and median of every metric per algorithm, in ALGORITHMS order"""
    grouped = runs.groupby("algorithm")[SUMMARY_METRICS].agg(["mean", "median"])
    grouped.columns = [f"{metric}_{stat}" for metric, stat in grouped.columns]
    order = [a for a in ALGORITHMS if a in grouped.index]
    return grouped.loc[order].reset_index()


def create_comparison_plot(summary: pd.DataFrame, path):
    frame = summary.set_index("algorithm")[["accuracy_median", "positive_f1_median", "macro_f1_median"]]
    fig, ax = plt.subplots(figsize=(10, 6))
    frame.plot(kind="bar", ax=ax, colormap="viridis")
    ax.set_title("Held-out Performance by Algorithm (median over seeds)", fontsize=14, fontweight="bold")
    ax.set_xlabel("Algorithm")
    ax.set_ylabel("Score")
    ax.set_ylim(0, 1)
    ax.legend(bbox_to_anchor=(1.05, 1), loc="upper left")
    ax.tick_params(axis="x", rotation=0)
    plt.tight_layout()
    plt.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    logger.info(f"Comparison plot saved to {path}")


def run_benchmark(synth: SynthConfig, base: RunConfig, algorithms=ALGORITHMS, seeds=(0, 1, 2), out_dir=None, n_jobs=1):
    """
    Returns (runs, summary) DataFrames; with out_dir also writes
    benchmark_runs.csv, benchmark_summary.csv and benchmark_comparison.png.
    """
    jobs = [(algorithm, seed) for algorithm in algorithms for seed in seeds]
    logger.info(f"Benchmark: {len(jobs)} runs ({list(algorithms)} x seeds {list(seeds)}), n_jobs={n_jobs}")
    rows = Parallel(n_jobs=n_jobs)(delayed(benchmark_run)(a, s, synth, base) for a, s in jobs)

    runs = pd.DataFrame(rows, columns=RUN_COLUMNS)
    runs["order"] = runs["algorithm"].map(ALGORITHMS.index)
    runs = runs.sort_values(["order", "seed"]).drop(columns="order").reset_index(drop=True)
    summary = summarize(runs)

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        runs.to_csv(os.path.join(out_dir, "benchmark_runs.csv"), index=False, float_format="%.6f")
        summary.to_csv(os.path.join(out_dir, "benchmark_summary.csv"), index=False, float_format="%.6f")
        create_comparison_plot(summary, os.path.join(out_dir, "benchmark_comparison.png"))
    return runs, summary
