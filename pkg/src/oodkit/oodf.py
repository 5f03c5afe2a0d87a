"""OODF v1: bit-exact binary feature-file format with a JSON sidecar.

Layout (all integers and floats little-endian regardless of host):

    magic      4 bytes  b"OODF"
    version    u16      currently 1
    flags      u16      bit0 logits, bit1 penultimate, bit2 head, bit3 labels
    n_rows     u32
    feat_dim   u32
    n_classes  u32      0 = absent
    penult_dim u32      0 = absent

followed by the payload: row-major 32-bit IEEE-754 blocks in declared order
(features, logits, penultimate, head weights then bias, labels). Labels are
stored as float32 and checked for integrality on read.

The sidecar at ``<path>.json`` carries provenance metadata plus a pinned
``sha256:`` digest over the full file bytes; any single-byte corruption of
header or payload is reported as a digest error.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile

import numpy as np

from .errors import (
    DigestError,
    MagicError,
    NonFinitePayloadError,
    SidecarError,
    SizeMismatchError,
    ValidationError,
    VersionError,
)
from .features import FeatureSet

MAGIC = b"OODF"
VERSION = 1
_HEADER = struct.Struct("<4sHHIIII")

FLAG_LOGITS = 1 << 0
FLAG_PENULT = 1 << 1
FLAG_HEAD = 1 << 2
FLAG_LABELS = 1 << 3

# Labels survive the float32 round trip only below this.
_MAX_LABEL = 1 << 24


def sidecar_path(path: str) -> str:
    return path + ".json"


def _digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def _f32_bytes(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f4").tobytes()


def write_feature_file(fs: FeatureSet, path: str) -> str:
    """Serialize a FeatureSet; returns the digest recorded in the sidecar.

    The .oodf file and its sidecar are written via temp-file + atomic rename.
    """
    flags = 0
    n_classes = fs.n_classes or 0
    penult_dim = fs.penultimate.shape[1] if fs.penultimate is not None else 0
    if fs.head_weights is not None:
        penult_dim = fs.head_weights.shape[1]

    blocks = [_f32_bytes(fs.features)]
    if fs.logits is not None:
        flags |= FLAG_LOGITS
        blocks.append(_f32_bytes(fs.logits))
    if fs.penultimate is not None:
        flags |= FLAG_PENULT
        blocks.append(_f32_bytes(fs.penultimate))
    if fs.head_weights is not None:
        flags |= FLAG_HEAD
        blocks.append(_f32_bytes(fs.head_weights))
        blocks.append(_f32_bytes(fs.head_bias))
    if fs.labels is not None:
        if fs.labels.max(initial=0) >= _MAX_LABEL:
            raise ValidationError("labels too large for float32 storage")
        flags |= FLAG_LABELS
        blocks.append(_f32_bytes(fs.labels.astype(np.float64)))

    header = _HEADER.pack(
        MAGIC, VERSION, flags, fs.n_rows, fs.feat_dim, n_classes, penult_dim
    )
    data = header + b"".join(blocks)
    digest = _digest(data)

    _atomic_write(path, data)
    sidecar = {"format": "oodf", "version": VERSION, "digest": digest, **fs.meta}
    _atomic_write(
        sidecar_path(path),
        (json.dumps(sidecar, sort_keys=True, indent=2) + "\n").encode(),
    )
    return digest


def _atomic_write(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".oodf-tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_feature_file(path: str, check_digest: bool = True) -> FeatureSet:
    """Parse an OODF file back into a FeatureSet.

    Raises a distinct error kind per failure mode: MagicError, VersionError,
    SizeMismatchError, DigestError, NonFinitePayloadError, SidecarError.
    No partial FeatureSet is ever returned.
    """
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEADER.size:
        raise SizeMismatchError(f"{path}: file shorter than header")
    magic, version, flags, n_rows, feat_dim, n_classes, penult_dim = _HEADER.unpack(
        data[: _HEADER.size]
    )
    if magic != MAGIC:
        raise MagicError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise VersionError(f"{path}: unsupported version {version}")

    counts = [n_rows * feat_dim]
    if flags & FLAG_LOGITS:
        counts.append(n_rows * n_classes)
    if flags & FLAG_PENULT:
        counts.append(n_rows * penult_dim)
    if flags & FLAG_HEAD:
        counts.append(n_classes * penult_dim)
        counts.append(n_classes)
    if flags & FLAG_LABELS:
        counts.append(n_rows)
    expected = _HEADER.size + 4 * sum(counts)
    if len(data) != expected:
        raise SizeMismatchError(
            f"{path}: payload is {len(data) - _HEADER.size} bytes, "
            f"header declares {expected - _HEADER.size}"
        )

    meta: dict = {}
    if check_digest:
        sc_path = sidecar_path(path)
        if not os.path.exists(sc_path):
            raise SidecarError(f"{path}: sidecar {sc_path} missing")
        try:
            with open(sc_path, "r") as f:
                sidecar = json.load(f)
        except json.JSONDecodeError as e:
            raise SidecarError(f"{sc_path}: malformed JSON ({e})") from e
        recorded = sidecar.get("digest")
        actual = _digest(data)
        if recorded != actual:
            raise DigestError(f"{path}: digest mismatch ({recorded} != {actual})")
        meta = {
            k: v for k, v in sidecar.items() if k not in ("format", "version", "digest")
        }

    raw = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    if not np.all(np.isfinite(raw)):
        raise NonFinitePayloadError(f"{path}: payload contains non-finite values")

    pos = 0

    def take(shape) -> np.ndarray:
        nonlocal pos
        n = int(np.prod(shape))
        block = raw[pos : pos + n].reshape(shape).astype(np.float32)
        pos += n
        return block

    features = take((n_rows, feat_dim))
    logits = take((n_rows, n_classes)) if flags & FLAG_LOGITS else None
    penultimate = take((n_rows, penult_dim)) if flags & FLAG_PENULT else None
    head_w = head_b = None
    if flags & FLAG_HEAD:
        head_w = take((n_classes, penult_dim))
        head_b = take((n_classes,))
    labels = None
    if flags & FLAG_LABELS:
        raw_labels = take((n_rows,))
        if not np.array_equal(raw_labels, np.rint(raw_labels)):
            raise NonFinitePayloadError(f"{path}: labels block is not integral")
        labels = raw_labels.astype(np.int32)

    return FeatureSet(
        features=features,
        logits=logits,
        penultimate=penultimate,
        head_weights=head_w,
        head_bias=head_b,
        labels=labels,
        meta=meta,
    )


def inspect_header(path: str) -> dict:
    """Parse just the header fields, without validating the payload."""
    with open(path, "rb") as f:
        data = f.read(_HEADER.size)
    if len(data) < _HEADER.size:
        raise SizeMismatchError(f"{path}: file shorter than header")
    magic, version, flags, n_rows, feat_dim, n_classes, penult_dim = _HEADER.unpack(data)
    if magic != MAGIC:
        raise MagicError(f"{path}: bad magic {magic!r}")
    return {
        "magic": magic.decode("ascii"),
        "version": version,
        "flags": {
            "logits": bool(flags & FLAG_LOGITS),
            "penultimate": bool(flags & FLAG_PENULT),
            "head": bool(flags & FLAG_HEAD),
            "labels": bool(flags & FLAG_LABELS),
        },
        "n_rows": n_rows,
        "feat_dim": feat_dim,
        "n_classes": n_classes,
        "penult_dim": penult_dim,
    }
