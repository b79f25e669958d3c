"""
SCLF checkpoint files

    magic   4 bytes  b"SCLF"
    version u32 LE   1
    V H1 H2 C        u32 LE each
    count   u64 LE   number of parameters
    values  count x float64 LE, layout order of src.model.classifier
"""

import logging
import os
import struct

import numpy as np

from src.model.classifier import ModelSpec, ParamVector
from src.utils.errors import (
    BadMagicError,
    LengthMismatchError,
    SpecMismatchError,
    TruncatedCheckpointError,
    VersionMismatchError,
)

logger = logging.getLogger(__name__)

MAGIC = b"SCLF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIQ")


def save_params(params: ParamVector, spec: ModelSpec, path) -> None:
    """Write the parameter vector and its dimensions to an SCLF file"""
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (spec.param_count,):
        raise LengthMismatchError(
            f"vector of length {params.size} does not fit spec with {spec.param_count} parameters"
        )

    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, spec.hash_buckets, spec.hidden1, spec.hidden2, spec.classes, params.size
    )
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        f.write(header)
        f.write(params.astype("<f8").tobytes())
    logger.info(f"Saved {params.size} parameters to {path}")


def load_params(path):
    """Read an SCLF file; returns (params, spec)"""
    with open(path, "rb") as f:
        blob = f.read()

    # a short file that is still a prefix of the magic counts as truncated
    if blob[:4] != MAGIC[:len(blob[:4])]:
        raise BadMagicError(f"{path}: bad magic {blob[:4]!r}, expected {MAGIC!r}")
    if len(blob) < _HEADER.size:
        raise TruncatedCheckpointError(f"{path}: header truncated at {len(blob)} bytes")

    _, version, v, h1, h2, c, count = _HEADER.unpack_from(blob)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: version {version}, this build reads version {FORMAT_VERSION}")

    try:
        spec = ModelSpec(hash_buckets=int(v), hidden1=int(h1), hidden2=int(h2), classes=int(c))
    except ValueError as exc:
        raise LengthMismatchError(f"{path}: invalid header dimensions ({exc})") from exc
    if count != spec.param_count:
        raise LengthMismatchError(
            f"{path}: header dims V={v} H1={h1} H2={h2} C={c} imply {spec.param_count} parameters, header says {count}"
        )

    payload = blob[_HEADER.size:]
    expected_bytes = count * 8
    if len(payload) < expected_bytes:
        raise TruncatedCheckpointError(f"{path}: payload has {len(payload)} bytes, expected {expected_bytes}")
    if len(payload) > expected_bytes:
        raise LengthMismatchError(f"{path}: {len(payload) - expected_bytes} trailing bytes after the parameters")

    params = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    logger.info(f"Loaded {count} parameters from {path}")
    return params, spec


def load_params_for(path, expected: ModelSpec):
    """Load a checkpoint and insist it matches the configured model dimensions"""
    params, spec = load_params(path)
    if spec != expected:
        raise SpecMismatchError(f"{path}: checkpoint spec {spec} does not match configured {expected}")
    return params, spec
