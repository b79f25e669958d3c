"""
Main Pipeline for Cross-Platform Abusive Language Detection
Command-line entry point: train, eval, diagnose, synth, export-embeddings, benchmark
"""

import argparse
import json
import logging
import os
import sys
from datetime import datetime

from dotenv import load_dotenv

from src.evaluation.evaluator import evaluate, export_embeddings
from src.model.checkpoint import load_params_for
from src.preprocessing.data_loader import load_jsonl, save_jsonl
from src.preprocessing.feature_hashing import encode_platforms
from src.preprocessing.synthetic import generate_synthetic, load_synth_config
from src.training.benchmark import run_benchmark
from src.training.diagnostics import cosine_convergence_experiment, get_toy, platform_gradient_alignment
from src.training.model_trainer import CrossPlatformTrainer
from src.training.trainers import ALGORITHMS
from src.utils.config import PRESETS, load_run_config, parse_overrides
from src.utils.errors import ConfigError, DataError, PipelineError

logger = logging.getLogger("main_pipeline")

DEFAULT_CONFIG = os.path.join("config", "config.yaml")
DEFAULT_SYNTH_CONFIG = os.path.join("config", "synthetic.yaml")
LOG_LEVEL_ENV = "SCLFISH_LOG_LEVEL"


def configure_logging(settings, log_dir=None):
    """Handlers on stderr and, when a run directory is known, its pipeline.log"""
    load_dotenv()
    level = os.environ.get(LOG_LEVEL_ENV, settings.get("level", "INFO")).upper()
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        handlers.append(logging.FileHandler(os.path.join(log_dir, settings.get("file", "pipeline.log"))))
    logging.basicConfig(level=level, format=settings["format"], handlers=handlers, force=True)


def _banner(title):
    logger.info("=" * 50)
    logger.info(title)
    logger.info("=" * 50)


class CrossPlatformPipeline:
    """One command per method; every method returns the artifact it produced"""

    def __init__(self, config):
        self.config = config
        self.start_time = datetime.now()

    # -- helpers ---------------------------------------------------------------

    def _checkpoint_path(self):
        return self.config.checkpoint or os.path.join(self.config.out, "best.ckpt")

    def _load_checkpoint(self):
        path = self._checkpoint_path()
        if not os.path.exists(path):
            raise DataError(f"checkpoint not found: {path}")
        params, spec = load_params_for(path, self.config.model_spec())
        return params, spec

    def _plan(self):
        trainer = CrossPlatformTrainer(self.config)
        return trainer.make_plan(trainer.load_data())

    def _write_json(self, document, name):
        os.makedirs(self.config.out, exist_ok=True)
        path = os.path.join(self.config.out, name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, indent=2)
            f.write("\n")
        logger.info(f"Saved {path}")
        return path

    # -- commands --------------------------------------------------------------

    def run_train(self):
        _banner(f"TRAINING {self.config.algorithm.upper()}")
        result, _ = CrossPlatformTrainer(self.config).run()
        logger.info(f"Training completed in {datetime.now() - self.start_time}")
        return result

    def run_eval(self):
        _banner(f"EVALUATION ({self.config.mode}{', balanced' if self.config.balanced else ''})")
        params, spec = self._load_checkpoint()
        plan = self._plan()
        if self.config.mode == "cross":
            datasets = plan.test
        elif self.config.mode == "in":
            datasets = plan.train
        else:
            datasets = [] if plan.validation is None else [plan.validation]
        if not datasets:
            raise ConfigError(f"no platforms in role for mode {self.config.mode!r}")

        report = evaluate(
            params, spec, datasets, mode=self.config.mode, balanced=self.config.balanced, seed=self.config.seed
        )
        suffix = "_balanced" if self.config.balanced else ""
        report.save(os.path.join(self.config.out, f"metrics_{self.config.mode}{suffix}.json"))
        print(report.to_json())
        return report

    def run_diagnose_gip(self):
        _banner("DIAGNOSTIC: GRADIENT INNER PRODUCT")
        params, spec = self._load_checkpoint()
        plan = self._plan()
        if len(plan.train) < 2:
            raise ConfigError(f"gip needs at least 2 platforms, got {len(plan.train)}")
        pairs, summary = platform_gradient_alignment(
            params, spec, encode_platforms(plan.train, spec.hash_buckets), self.config.gip_scale
        )
        os.makedirs(self.config.out, exist_ok=True)
        pairs.to_csv(os.path.join(self.config.out, "gip_pairs.csv"), index=False, float_format="%.17g")
        self._write_json(summary, "gip_summary.json")
        print(pairs.to_string(index=False))
        print(json.dumps(summary, indent=2))
        return pairs, summary

    def run_diagnose_cosine(self):
        _banner("DIAGNOSTIC: COSINE CONVERGENCE")
        try:
            toy = get_toy(self.config.cosine_toy)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        table = cosine_convergence_experiment(toy, self.config.cosine_alphas)
        os.makedirs(self.config.out, exist_ok=True)
        table.to_csv(os.path.join(self.config.out, f"cosine_{toy.name}.csv"), index=False, float_format="%.17g")
        print(table.to_string(index=False))
        return table

    def run_export_embeddings(self, output=None, platforms=None):
        _banner("EMBEDDING EXPORT")
        params, spec = self._load_checkpoint()
        datasets = load_jsonl(self.config.data) if self.config.data else None
        if datasets is None:
            raise ConfigError("no data file given (--data)")
        if platforms:
            known = {d.platform: d for d in datasets}
            missing = [p for p in platforms if p not in known]
            if missing:
                raise ConfigError(f"unknown platform(s): {', '.join(missing)}")
            datasets = [known[p] for p in platforms]
        return export_embeddings(params, spec, datasets, output or os.path.join(self.config.out, "embeddings.csv"))


def run_synth(args):
    _banner("SYNTHETIC CORPUS")
    overrides = parse_overrides(args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = load_synth_config(args.config, overrides)
    datasets = generate_synthetic(cfg)
    save_jsonl(datasets, args.out)
    return datasets


def _common_flags(parser):
    parser.add_argument("--config", type=str, default=None, help="YAML config or a run's manifest.json")
    parser.add_argument("--preset", type=str, choices=list(PRESETS), default=None)
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--algorithm", type=str, choices=ALGORITHMS, default=None)
    parser.add_argument("--data", type=str, default=None, help="JSONL corpus")
    parser.add_argument("--out", type=str, default=None, help="output directory")
    parser.add_argument("--checkpoint", type=str, default=None)
    parser.add_argument("--train-platforms", type=str, default=None, help="comma-separated")
    parser.add_argument("--val-platform", type=str, default=None)
    parser.add_argument("--test-platforms", type=str, default=None, help="comma-separated")
    parser.add_argument("--mode", type=str, choices=["cross", "in", "validation"], default=None)
    parser.add_argument("--balanced", action="store_true", default=None)


def build_parser():
    parser = argparse.ArgumentParser(description="Cross-platform abusive language detection with SCL-Fish")
    commands = parser.add_subparsers(dest="command", required=True)

    _common_flags(commands.add_parser("train", help="train one algorithm and write run artifacts"))
    _common_flags(commands.add_parser("eval", help="evaluate a checkpoint on a platform role"))

    diagnose = commands.add_parser("diagnose", help="gradient alignment diagnostics")
    diagnostics = diagnose.add_subparsers(dest="diagnostic", required=True)
    _common_flags(diagnostics.add_parser("gip", help="pairwise gradient dot products at a checkpoint"))
    cosine = diagnostics.add_parser("cosine", help="cosine(G_f, G_g) on a built-in toy model")
    _common_flags(cosine)
    cosine.add_argument("--toy", type=str, default=None)
    cosine.add_argument("--alphas", type=str, default=None, help="comma-separated inner learning rates")

    synth = commands.add_parser("synth", help="generate a synthetic JSONL corpus")
    synth.add_argument("--config", type=str, default=DEFAULT_SYNTH_CONFIG)
    synth.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--out", type=str, required=True, help="output JSONL path")

    export = commands.add_parser("export-embeddings", help="write f(x) of every example as CSV")
    _common_flags(export)
    export.add_argument("--output", type=str, default=None, help="CSV path (default OUT/embeddings.csv)")
    export.add_argument("--platforms", type=str, default=None, help="comma-separated subset of platforms")

    bench = commands.add_parser("benchmark", help="multi-seed algorithm comparison on synthetic corpora")
    _common_flags(bench)
    bench.add_argument("--synth-config", type=str, default=DEFAULT_SYNTH_CONFIG)
    bench.add_argument("--algorithms", type=str, default=",".join(ALGORITHMS))
    bench.add_argument("--seeds", type=str, default="0,1,2")
    bench.add_argument("--n-jobs", type=int, default=1)
    bench.set_defaults(preset="benchmark")
    return parser


def _flag_overrides(args):
    overrides = parse_overrides(args.set)
    mapping = {
        "seed": args.seed,
        "algorithm": args.algorithm,
        "data": args.data,
        "out": args.out,
        "checkpoint": args.checkpoint,
        "train_platforms": args.train_platforms,
        "val_platform": args.val_platform,
        "test_platforms": args.test_platforms,
        "mode": args.mode,
        "balanced": args.balanced,
        "cosine_toy": getattr(args, "toy", None),
        "cosine_alphas": getattr(args, "alphas", None),
    }
    overrides.update({k: v for k, v in mapping.items() if v is not None})
    return overrides


def _csv_list(text):
    return [part.strip() for part in text.split(",") if part.strip()]


def main(argv=None):
    """Parse arguments, run one command and return its exit code"""
    args = build_parser().parse_args(argv)

    try:
        if args.command == "synth":
            configure_logging(load_run_config(DEFAULT_CONFIG if os.path.exists(DEFAULT_CONFIG) else None)[1])
            run_synth(args)
            return 0

        config_path = args.config or (DEFAULT_CONFIG if os.path.exists(DEFAULT_CONFIG) else None)
        config, log_settings = load_run_config(config_path, args.preset, _flag_overrides(args))
        writes_run_dir = args.command in ("train", "benchmark")
        configure_logging(log_settings, config.out if writes_run_dir else None)
        pipeline = CrossPlatformPipeline(config)

        if args.command == "train":
            pipeline.run_train()
        elif args.command == "eval":
            pipeline.run_eval()
        elif args.command == "diagnose" and args.diagnostic == "gip":
            pipeline.run_diagnose_gip()
        elif args.command == "diagnose":
            pipeline.run_diagnose_cosine()
        elif args.command == "export-embeddings":
            platforms = _csv_list(args.platforms) if args.platforms else None
            pipeline.run_export_embeddings(args.output, platforms)
        elif args.command == "benchmark":
            _banner("BENCHMARK")
            algorithms = _csv_list(args.algorithms)
            unknown = [a for a in algorithms if a not in ALGORITHMS]
            if unknown:
                raise ConfigError(f"unknown algorithm(s): {', '.join(unknown)}")
            try:
                seeds = [int(s) for s in _csv_list(args.seeds)]
            except ValueError as exc:
                raise ConfigError(f"--seeds must be comma-separated integers: {exc}") from exc
            _, summary = run_benchmark(
                load_synth_config(args.synth_config), config, algorithms, seeds, config.out, args.n_jobs
            )
            print(summary.to_string(index=False))
    except PipelineError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code

    logger.info("Pipeline execution completed successfully!")
    return 0


if __name__ == "__main__":
    sys.exit(main())
