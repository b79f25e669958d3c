"""
Loss Functions for Cross-Platform Abusive Language Detection

cross_entropy: mean softmax cross-entropy over a batch of logits.
scl_loss: supervised contrastive loss over a batch of embeddings.

Both return the loss together with the exact gradient of that batch loss
with respect to their inputs, ready to feed src.model.classifier.backward.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.utils.errors import EmptyBatchError

logger = logging.getLogger(__name__)


@dataclass
class SclBatch:
    """Rows of `embeddings` are f(x_i); `labels` are class ids; `temperature` is tau"""

    embeddings: np.ndarray
    labels: np.ndarray
    temperature: float

    def __post_init__(self):
        self.embeddings = np.atleast_2d(np.asarray(self.embeddings, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.embeddings.shape[0] == 0 or self.embeddings.size == 0:
            raise EmptyBatchError("supervised contrastive loss needs at least one sample")
        if self.labels.shape != (self.embeddings.shape[0],):
            raise ValueError(f"{self.labels.size} labels for {self.embeddings.shape[0]} embeddings")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")

    def __len__(self):
        return self.embeddings.shape[0]


def cross_entropy(logits, labels):
    """
    Mean of -log softmax(logits)[label] over the batch.

    Returns (loss, d_logits) where d_logits[i] = (softmax_i - onehot_i) / n,
    the gradient of the mean.
    """
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64)
    n = logits.shape[0]
    if n == 0:
        raise EmptyBatchError("cross-entropy needs a non-empty batch")
    if labels.shape != (n,):
        raise ValueError(f"{labels.size} labels for {n} rows of logits")
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise ValueError(f"labels must lie in [0, {logits.shape[1]})")

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    rows = np.arange(n)
    loss = -log_probs[rows, labels].mean()

    d_logits = np.exp(log_probs)
    d_logits[rows, labels] -= 1.0
    d_logits /= n
    return float(loss), d_logits


def _normalize_rows(embeddings):
    norms = np.linalg.norm(embeddings, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return embeddings / safe[:, None], norms


def scl_loss(batch: SclBatch):
    """
    Supervised contrastive loss and its gradient w.r.t. the raw embeddings.

    Rows are L2-normalized (zero rows stay zero). For anchor i the positives are
    j != i with the same label and the softmax denominator runs over every k != i.
    Each anchor's loss is the mean over its positives; the batch loss is the mean
    over anchors with at least one positive. Anchors without positives add nothing.
    """
    z, norms = _normalize_rows(batch.embeddings)
    n = len(batch)
    labels = batch.labels

    others = ~np.eye(n, dtype=bool)
    positives = (labels[:, None] == labels[None, :]) & others
    n_pos = positives.sum(axis=1)
    anchors = n_pos > 0
    n_anchors = int(anchors.sum())
    if n_anchors == 0:
        return 0.0, np.zeros_like(batch.embeddings)

    sim = (z @ z.T) / batch.temperature
    masked = np.where(others, sim, -np.inf)
    row_max = masked.max(axis=1, keepdims=True)
    row_max = np.where(np.isfinite(row_max), row_max, 0.0)
    exp_sim = np.where(others, np.exp(masked - row_max), 0.0)
    denom = exp_sim.sum(axis=1, keepdims=True)
    log_denom = np.log(np.where(denom > 0, denom, 1.0)) + row_max

    log_prob = np.where(others, sim - log_denom, 0.0)
    pos_weight = np.where(anchors[:, None], positives / np.maximum(n_pos, 1)[:, None], 0.0)
    per_anchor = -(pos_weight * log_prob).sum(axis=1)
    loss = per_anchor[anchors].sum() / n_anchors

    # dL/dsim[i, j] = (p_ij - 1[j in P(i)] / |P(i)|) / |A| for anchors i
    softmax = np.where(denom > 0, exp_sim / np.where(denom > 0, denom, 1.0), 0.0)
    d_sim = np.where(anchors[:, None], softmax - pos_weight, 0.0) / n_anchors
    d_z = (d_sim + d_sim.T) @ z / batch.temperature

    # back through the row normalization z = e / |e|
    radial = (z * d_z).sum(axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)[:, None]
    d_embeddings = np.where(norms[:, None] > 0, (d_z - z * radial) / safe, 0.0)
    return float(loss), d_embeddings


def scl_loss_bruteforce(batch: SclBatch) -> float:
    """Triple-loop evaluation of the same conventions as scl_loss (reference oracle)"""
    rows = [list(map(float, row)) for row in batch.embeddings]
    labels = [int(label) for label in batch.labels]
    n = len(rows)

    unit = []
    for row in rows:
        norm = math.sqrt(sum(v * v for v in row))
        unit.append([v / norm for v in row] if norm > 0 else [0.0] * len(row))

    def similarity(a, b):
        return sum(x * y for x, y in zip(unit[a], unit[b])) / batch.temperature

    total = 0.0
    anchors = 0
    for i in range(n):
        positives = [j for j in range(n) if j != i and labels[j] == labels[i]]
        if not positives:
            continue
        anchors += 1
        candidates = [similarity(i, k) for k in range(n) if k != i]
        peak = max(candidates)
        denominator = 0.0
        for value in candidates:
            denominator += math.exp(value - peak)
        anchor_loss = 0.0
        for j in positives:
            numerator = math.exp(similarity(i, j) - peak)
            anchor_loss -= math.log(numerator / denominator)
        total += anchor_loss / len(positives)

    return total / anchors if anchors else 0.0
