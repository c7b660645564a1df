"""Standalone writer for the ".ooda" activation-dump interchange format.

Byte layout (little-endian):

    magic "OODA" | version u32 = 1 | num_records u64 | num_classes u32
    | feature_dim u32 (0 = absent) | flags u32 (bit0 labels, bit1 features)
    per record: label i32 (if bit0) | logits num_classes x f32
                | features feature_dim x f32 (if bit1)

This module intentionally has no dependency on the evaluation engine; the
format is the contract between the two sides.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"OODA"
FORMAT_VERSION = 1
FLAG_LABELS = 1 << 0
FLAG_FEATURES = 1 << 1

_HEADER = struct.Struct("<IQIII")


def write_dump(
    path: str | Path,
    logits: np.ndarray,
    labels: np.ndarray | None = None,
    features: np.ndarray | None = None,
) -> None:
    logits = np.atleast_2d(np.asarray(logits))
    n, num_classes = logits.shape
    flags = 0
    fields = []
    if labels is not None:
        labels = np.asarray(labels).reshape(-1)
        if len(labels) != n:
            raise ValueError("label count does not match record count")
        flags |= FLAG_LABELS
        fields.append(("label", "<i4"))
    if num_classes > 0:
        fields.append(("logits", "<f4", (num_classes,)))
    feature_dim = 0
    if features is not None:
        features = np.atleast_2d(np.asarray(features))
        if features.shape[0] != n:
            raise ValueError("feature rows do not match record count")
        feature_dim = features.shape[1]
        flags |= FLAG_FEATURES
        fields.append(("features", "<f4", (feature_dim,)))
    header = MAGIC + _HEADER.pack(FORMAT_VERSION, n, num_classes, feature_dim, flags)
    if n == 0:
        Path(path).write_bytes(header)
        return
    arr = np.empty(n, dtype=np.dtype(fields))
    if flags & FLAG_LABELS:
        arr["label"] = labels.astype("<i4")
    if num_classes > 0:
        arr["logits"] = logits.astype("<f4")
    if flags & FLAG_FEATURES:
        arr["features"] = features.astype("<f4")
    Path(path).write_bytes(header + arr.tobytes())
