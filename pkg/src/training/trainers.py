"""
Training Procedures for Cross-Platform Abusive Language Detection

ERM and SCL-ERM train on the merged pool of training platforms. Fish and
SCL-Fish take one minibatch per platform per outer iteration, run sequential
SGD on a clone, and move the model toward the clone; SCL-Fish then takes
supervised contrastive steps over the samples consumed in that iteration.

All optimizers are plain SGD. The training state is mutated in place by a
single writer and returned for chaining.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse

from src.model.classifier import (
    ModelSpec,
    ParamVector,
    backward,
    clone_params,
    forward_batch,
    init_params,
    is_finite,
)
from src.preprocessing.feature_hashing import EncodedPlatform, merge_platforms
from src.training.losses import SclBatch, cross_entropy, scl_loss
from src.utils.errors import DataError, NumericalInstabilityError

logger = logging.getLogger(__name__)

DATA_STREAM = 0
SCHEDULE_STREAM = 1

ALGORITHMS = ("erm", "scl-erm", "fish", "scl-fish")


def derive_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent deterministic generator for one purpose (data order, platform schedule)"""
    return np.random.default_rng([int(seed), int(stream)])


@dataclass
class TrainConfig:
    """Scalars of the training procedures. scl_lr defaults to inner_lr."""

    inner_lr: float = 0.05
    meta_lr: float = 0.05
    scl_lr: Optional[float] = None
    temperature: float = 0.05
    gip_scale: float = 0.0
    batch_size: int = 8
    epochs: int = 10
    seed: int = 0
    meta_sign: float = 1.0
    scl_weight_mode: str = "separate-step"

    def __post_init__(self):
        if self.scl_lr is None:
            self.scl_lr = self.inner_lr
        # zero rates are accepted so degenerate trajectories can be studied
        for name in ("inner_lr", "meta_lr", "scl_lr"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.gip_scale < 0:
            raise ValueError(f"gip_scale must be non-negative, got {self.gip_scale}")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")
        if self.seed < 0:
            raise ValueError(f"seed must be a non-negative 64-bit integer, got {self.seed}")
        if self.meta_sign not in (1.0, -1.0):
            raise ValueError(f"meta_sign must be +1 or -1, got {self.meta_sign}")
        if self.scl_weight_mode != "separate-step":
            raise ValueError(f"unsupported scl_weight_mode {self.scl_weight_mode!r}")


@dataclass
class Minibatch:
    platform: str
    features: object
    labels: np.ndarray

    def __len__(self):
        return self.features.shape[0]


@dataclass
class TrainState:
    """theta plus everything that makes the run reproducible"""

    params: ParamVector
    spec: ModelSpec
    rng: np.random.Generator
    step: int = 0
    loss_trace: List[float] = field(default_factory=list)
    trace: List[dict] = field(default_factory=list)
    epoch_start: int = 0

    @classmethod
    def create(cls, spec: ModelSpec, cfg: TrainConfig, params: Optional[ParamVector] = None):
        if params is None:
            params = init_params(spec, cfg.seed)
        return cls(params=params, spec=spec, rng=derive_rng(cfg.seed, DATA_STREAM))

    def apply(self, params: ParamVector):
        """Install an updated parameter vector after checking it is finite"""
        if not is_finite(params):
            raise NumericalInstabilityError(f"non-finite parameters after step {self.step}")
        self.params = params
        self.step += 1


class DomainBatchSchedule:
    """
    Per-platform minibatch cursors plus a fresh platform order per outer iteration.

    Each platform is reshuffled whenever its cursor runs out; the short final
    minibatch of a pass is kept.
    """

    def __init__(self, platforms: Sequence[EncodedPlatform], batch_size: int, seed: int):
        if not platforms:
            raise DataError("a domain schedule needs at least one training platform")
        for platform in platforms:
            if len(platform) == 0:
                raise DataError(f"platform {platform.platform} has no samples")
        self.platforms = list(platforms)
        self.batch_size = batch_size
        self.rng = derive_rng(seed, SCHEDULE_STREAM)
        self._orders = [None] * len(self.platforms)
        self._cursors = [0] * len(self.platforms)
        self.order = []

    def __len__(self):
        return len(self.platforms)

    def iterations_per_epoch(self):
        total = sum(len(p) for p in self.platforms)
        return max(1, math.ceil(total / (len(self.platforms) * self.batch_size)))

    def _draw(self, k):
        platform = self.platforms[k]
        if self._orders[k] is None or self._cursors[k] >= len(platform):
            self._orders[k] = self.rng.permutation(len(platform))
            self._cursors[k] = 0
        start = self._cursors[k]
        rows = self._orders[k][start:start + self.batch_size]
        self._cursors[k] = start + len(rows)
        return rows

    def next_iteration(self) -> List[Minibatch]:
        """Minibatches of every platform, in this iteration's platform order"""
        self.order = [int(k) for k in self.rng.permutation(len(self.platforms))]
        batches = []
        for k in self.order:
            rows = self._draw(k)
            platform = self.platforms[k]
            batches.append(Minibatch(platform.platform, platform.features[rows], platform.labels[rows]))
        return batches


def cross_entropy_gradient(params: ParamVector, spec: ModelSpec, features, labels):
    """(mean cross-entropy, gradient) of one batch"""
    cache = forward_batch(params, spec, features)
    loss, d_logits = cross_entropy(cache.logits, labels)
    return loss, backward(params, spec, cache, d_logits=d_logits)


def scl_gradient(params: ParamVector, spec: ModelSpec, features, labels, temperature: float):
    """(supervised contrastive loss, gradient) of one batch; the head receives no gradient"""
    cache = forward_batch(params, spec, features)
    loss, d_embeddings = scl_loss(SclBatch(cache.embeddings, labels, temperature))
    return loss, backward(params, spec, cache, d_embeddings=d_embeddings)


def _minibatch_rows(n, batch_size, rng):
    order = rng.permutation(n)
    return [order[start:start + batch_size] for start in range(0, n, batch_size)]


def _merged_pool(data) -> EncodedPlatform:
    if isinstance(data, EncodedPlatform):
        pool = data
    else:
        pool = merge_platforms(list(data))
    if len(pool) == 0:
        raise DataError("training pool is empty")
    return pool


def erm_epoch(state: TrainState, data, cfg: TrainConfig, probe=None) -> TrainState:
    """One pass of minibatch SGD over the shuffled union of the training platforms"""
    return _pooled_epoch(state, data, cfg, probe, use_scl=False)


def scl_erm_epoch(state: TrainState, data, cfg: TrainConfig, probe=None) -> TrainState:
    """ERM epoch where every cross-entropy step is followed by an SCL step on the same minibatch"""
    return _pooled_epoch(state, data, cfg, probe, use_scl=True)


def _pooled_epoch(state, data, cfg, probe, use_scl):
    pool = _merged_pool(data)
    epoch = len(state.loss_trace)
    state.epoch_start = len(state.trace)
    losses = []
    for iteration, rows in enumerate(_minibatch_rows(len(pool), cfg.batch_size, state.rng)):
        features, labels = pool.features[rows], pool.labels[rows]
        gip_hat = probe.record(state.params) if probe is not None else None

        loss, grad = cross_entropy_gradient(state.params, state.spec, features, labels)
        state.apply(state.params - cfg.inner_lr * grad)
        losses.append(loss)

        batch_scl = None
        if use_scl and cfg.scl_lr > 0:
            batch_scl, grad = scl_gradient(state.params, state.spec, features, labels, cfg.temperature)
            state.apply(state.params - cfg.scl_lr * grad)

        state.trace.append(_trace_record(epoch, iteration, {pool.platform: loss}, batch_scl, gip_hat))

    state.loss_trace.append(float(np.mean(losses)))
    logger.info(f"{'SCL-ERM' if use_scl else 'ERM'} epoch {epoch + 1}: mean loss {state.loss_trace[-1]:.4f}")
    return state


def fish_inner_loop(theta: ParamVector, spec: ModelSpec, minibatches: Sequence[Minibatch], cfg: TrainConfig):
    """
    Sequential SGD on a clone of theta, one step per platform minibatch in order.

    Returns (theta_tilde, per-platform losses evaluated at the clone before its step).
    """
    theta_tilde = clone_params(theta)
    losses = {}
    for batch in minibatches:
        if len(batch) == 0:
            raise DataError(f"platform {batch.platform} produced an empty minibatch")
        loss, grad = cross_entropy_gradient(theta_tilde, spec, batch.features, batch.labels)
        theta_tilde = theta_tilde - cfg.inner_lr * grad
        losses[batch.platform] = loss
    return theta_tilde, losses


def fish_meta_update(theta: ParamVector, theta_tilde: ParamVector, epsilon: float, sign: float = 1.0) -> ParamVector:
    """theta + sign * epsilon * (theta_tilde - theta), written as a convex combination"""
    theta = np.asarray(theta, dtype=np.float64)
    theta_tilde = np.asarray(theta_tilde, dtype=np.float64)
    if theta.shape != theta_tilde.shape:
        raise ValueError(f"length mismatch: {theta.shape} vs {theta_tilde.shape}")
    step = sign * epsilon
    return (1.0 - step) * theta + step * theta_tilde


def fish_step(state: TrainState, minibatches: Sequence[Minibatch], cfg: TrainConfig, probe=None) -> TrainState:
    """One outer iteration of plain Fish"""
    return _fish_iteration(state, minibatches, cfg, probe, use_scl=False)


def scl_fish_step(state: TrainState, minibatches: Sequence[Minibatch], cfg: TrainConfig, probe=None) -> TrainState:
    """One outer iteration of SCL-Fish: Fish meta-step, then SCL steps over the consumed samples"""
    return _fish_iteration(state, minibatches, cfg, probe, use_scl=True)


def _fish_iteration(state, minibatches, cfg, probe, use_scl):
    gip_hat = probe.record(state.params) if probe is not None else None

    theta_tilde, inner_losses = fish_inner_loop(state.params, state.spec, minibatches, cfg)
    state.apply(fish_meta_update(state.params, theta_tilde, cfg.meta_lr, cfg.meta_sign))

    scl_losses = []
    if use_scl and cfg.scl_lr > 0:
        features = sparse.vstack([b.features for b in minibatches], format="csr")
        labels = np.concatenate([b.labels for b in minibatches])
        for rows in _minibatch_rows(len(labels), cfg.batch_size, state.rng):
            loss, grad = scl_gradient(state.params, state.spec, features[rows], labels[rows], cfg.temperature)
            state.apply(state.params - cfg.scl_lr * grad)
            scl_losses.append(loss)

    iteration = len(state.trace) - state.epoch_start
    scl_value = float(np.mean(scl_losses)) if scl_losses else None
    state.trace.append(_trace_record(len(state.loss_trace), iteration, inner_losses, scl_value, gip_hat))
    return state


def fish_epoch(state: TrainState, schedule: DomainBatchSchedule, cfg: TrainConfig, use_scl: bool, probe=None):
    """Run iterations_per_epoch outer iterations of Fish or SCL-Fish"""
    step = scl_fish_step if use_scl else fish_step
    start = state.epoch_start = len(state.trace)
    for _ in range(schedule.iterations_per_epoch()):
        step(state, schedule.next_iteration(), cfg, probe)

    records = state.trace[start:]
    inner = [np.mean(list(r["platform_losses"].values())) for r in records]
    state.loss_trace.append(float(np.mean(inner)))
    logger.info(
        f"{'SCL-Fish' if use_scl else 'Fish'} epoch {len(state.loss_trace)}: "
        f"{len(records)} iterations, mean inner loss {state.loss_trace[-1]:.4f}"
    )
    return state


def run_epoch(algorithm: str, state: TrainState, platforms, cfg: TrainConfig, schedule=None, probe=None):
    """Dispatch one epoch of the named algorithm"""
    if algorithm == "erm":
        return erm_epoch(state, platforms, cfg, probe)
    if algorithm == "scl-erm":
        return scl_erm_epoch(state, platforms, cfg, probe)
    if algorithm in ("fish", "scl-fish"):
        if schedule is None:
            schedule = DomainBatchSchedule(platforms, cfg.batch_size, cfg.seed)
        return fish_epoch(state, schedule, cfg, use_scl=algorithm == "scl-fish", probe=probe)
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")


def _trace_record(epoch, iteration, platform_losses, scl_value, gip_hat):
    return {
        "epoch": epoch,
        "iter": iteration,
        "platform_losses": {k: float(v) for k, v in platform_losses.items()},
        "scl_loss": scl_value,
        "gip_hat": None if gip_hat is None else float(gip_hat),
    }
