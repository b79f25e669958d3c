"""
Hashing Bag-of-Words Classifier with Exact Gradients

Fixed architecture: L2-normalized hashed counts -> tanh layer (H1) -> tanh
layer (H2, the embedding f(x)) -> linear head (C = 2 logits).

Parameters live in one flat float64 vector. Layout, in order:
    W1 (H1 x V, row-major), b1 (H1), W2 (H2 x H1), b2 (H2), W3 (C x H2), b3 (C)

Every function here is pure: it reads the parameter vector and never writes it.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.preprocessing.feature_hashing import FeatureVector, features_to_matrix
from src.utils.errors import EmptyBatchError, RejectedInputError

logger = logging.getLogger(__name__)

# Documented aliases: both are 1-D float64 arrays in the layout above
ParamVector = np.ndarray
GradVector = np.ndarray

NUM_CLASSES = 2


@dataclass(frozen=True)
class ModelSpec:
    """Dimensions of the classifier"""

    hash_buckets: int
    hidden1: int
    hidden2: int
    classes: int = NUM_CLASSES

    def __post_init__(self):
        for name in ("hash_buckets", "hidden1", "hidden2"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.classes != NUM_CLASSES:
            raise ValueError(f"classes is fixed at {NUM_CLASSES}, got {self.classes}")

    @property
    def embedding_dim(self):
        return self.hidden2

    @property
    def shapes(self):
        """(name, shape) of every block in layout order"""
        v, h1, h2, c = self.hash_buckets, self.hidden1, self.hidden2, self.classes
        return [
            ("W1", (h1, v)),
            ("b1", (h1,)),
            ("W2", (h2, h1)),
            ("b2", (h2,)),
            ("W3", (c, h2)),
            ("b3", (c,)),
        ]

    @property
    def param_count(self):
        v, h1, h2, c = self.hash_buckets, self.hidden1, self.hidden2, self.classes
        return v * h1 + h1 + h1 * h2 + h2 + h2 * c + c


@dataclass
class ForwardResult:
    """Batch forward pass; the cached activations are what backward needs"""

    embeddings: np.ndarray
    logits: np.ndarray
    inputs: object
    hidden: np.ndarray

    @property
    def embedding(self):
        """f(x) of a single-example result"""
        if self.embeddings.shape[0] != 1:
            raise ValueError(f"embedding is defined for one example, this result holds {self.embeddings.shape[0]}")
        return self.embeddings[0]


def unpack_params(params: ParamVector, spec: ModelSpec):
    """Split the flat vector into reshaped views (no copy)"""
    if params.shape != (spec.param_count,):
        raise ValueError(f"parameter vector has shape {params.shape}, expected ({spec.param_count},)")
    blocks = {}
    offset = 0
    for name, shape in spec.shapes:
        size = int(np.prod(shape))
        blocks[name] = params[offset:offset + size].reshape(shape)
        offset += size
    return blocks


def pack_params(spec: ModelSpec, **blocks) -> ParamVector:
    """Inverse of unpack_params; every block W1..b3 must be given"""
    parts = []
    for name, shape in spec.shapes:
        block = np.asarray(blocks[name], dtype=np.float64)
        if block.shape != shape:
            raise ValueError(f"{name} has shape {block.shape}, expected {shape}")
        parts.append(block.ravel())
    return np.concatenate(parts)


def init_params(spec: ModelSpec, seed: int) -> ParamVector:
    """Uniform fan-based initialization, biases zero; a pure function of (spec, seed)"""
    rng = np.random.default_rng(seed)
    parts = []
    for name, shape in spec.shapes:
        if name.startswith("b"):
            parts.append(np.zeros(shape, dtype=np.float64).ravel())
        else:
            fan_out, fan_in = shape
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            parts.append(rng.uniform(-limit, limit, size=shape).ravel())
    params = np.concatenate(parts)
    logger.debug(f"Initialized {params.size} parameters with seed {seed}")
    return params


def clone_params(params: ParamVector) -> ParamVector:
    return np.array(params, dtype=np.float64, copy=True)


def _check_feature_vector(features: FeatureVector, spec: ModelSpec):
    for index, count in zip(features.indices, features.counts):
        if index < 0 or index >= spec.hash_buckets:
            raise RejectedInputError(f"feature index {index} outside [0, {spec.hash_buckets})")
        if count < 0:
            raise RejectedInputError(f"feature count {count} at index {index} is negative")


def forward_batch(params: ParamVector, spec: ModelSpec, inputs) -> ForwardResult:
    """Forward pass over an (n x V) matrix of already L2-normalized rows"""
    if inputs.shape[1] != spec.hash_buckets:
        raise RejectedInputError(f"input width {inputs.shape[1]} does not match {spec.hash_buckets} buckets")
    p = unpack_params(params, spec)
    hidden = np.tanh(np.asarray(inputs @ p["W1"].T) + p["b1"])
    embeddings = np.tanh(hidden @ p["W2"].T + p["b2"])
    logits = embeddings @ p["W3"].T + p["b3"]
    return ForwardResult(embeddings=embeddings, logits=logits, inputs=inputs, hidden=hidden)


def forward(params: ParamVector, features: FeatureVector, spec: ModelSpec) -> ForwardResult:
    """Forward pass of a single sparse count vector"""
    _check_feature_vector(features, spec)
    return forward_batch(params, spec, features_to_matrix([features], spec.hash_buckets))


def backward(
    params: ParamVector,
    spec: ModelSpec,
    cache: ForwardResult,
    d_logits: Optional[np.ndarray] = None,
    d_embeddings: Optional[np.ndarray] = None,
) -> GradVector:
    """
    Exact gradient of a batch objective with respect to the parameters.

    The upstream arrays are the gradients of the batch objective with respect to
    each row's logits and embedding, as returned by the losses module (they already
    carry the 1/|batch| of a mean). Contributions are summed in batch index order.
    """
    n = cache.logits.shape[0]
    if n == 0:
        raise EmptyBatchError("backward needs a non-empty batch")

    p = unpack_params(params, spec)
    if d_logits is None:
        d_logits = np.zeros_like(cache.logits)
    if d_embeddings is None:
        d_embeddings = np.zeros_like(cache.embeddings)

    e, h = cache.embeddings, cache.hidden

    g_w3 = d_logits.T @ e
    g_b3 = d_logits.sum(axis=0)

    d_a2 = (d_logits @ p["W3"] + d_embeddings) * (1.0 - e * e)
    g_w2 = d_a2.T @ h
    g_b2 = d_a2.sum(axis=0)

    d_a1 = (d_a2 @ p["W2"]) * (1.0 - h * h)
    # X^T @ d_a1 keeps the sparse operand on the left
    g_w1 = np.asarray(cache.inputs.T @ d_a1).T
    g_b1 = d_a1.sum(axis=0)

    return pack_params(spec, W1=g_w1, b1=g_b1, W2=g_w2, b2=g_b2, W3=g_w3, b3=g_b3)


def predict(params: ParamVector, spec: ModelSpec, inputs) -> np.ndarray:
    """Argmax of the logits; ties resolve to class 0 (normal)"""
    return np.argmax(forward_batch(params, spec, inputs).logits, axis=1)


def is_finite(vector: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(vector)))

