"""Activation-dump interchange format and synthetic dataset generators.

The binary "OODA" dump is the exchange surface between this engine and any
external exporter: a flat little-endian container of per-sample logits,
optional feature vectors, and optional integer labels.  Payload floats are
stored as 32-bit (compact, matches common framework export precision) and
upcast to 64-bit on read.

Raw vector datasets reuse the same container with ``num_classes == 0`` and
the input vectors stored in the features slot, so one format covers both
"model activations" and "data waiting for a model".
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"OODA"
FORMAT_VERSION = 1

FLAG_LABELS = 1 << 0
FLAG_FEATURES = 1 << 1

# after the 4-byte magic: version u32, num_records u64, num_classes u32,
# feature_dim u32, flags u32
_HEADER = struct.Struct("<IQIII")
HEADER_SIZE = 4 + _HEADER.size

UNLABELED = -1


class DumpFormatError(ValueError):
    """A dump file (or in-memory dump) violates the on-disk format."""


@dataclass
class ActivationRecord:
    """One sample's activations: logits, optional features, optional label.

    ``predicted`` is derived: index of the maximum logit, first index on
    ties, or -1 when the record carries no logits.
    """

    label: int
    logits: np.ndarray
    features: np.ndarray | None = None

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=np.float64).reshape(-1)
        if self.features is not None:
            self.features = np.asarray(self.features, dtype=np.float64).reshape(-1)
        self.label = int(self.label)

    @property
    def predicted(self) -> int:
        if self.logits.size == 0:
            return UNLABELED
        return int(np.argmax(self.logits))


@dataclass
class ActivationDump:
    """Columnar stack of activation records.

    logits   : (n, num_classes) float64, num_classes may be 0 for raw data
    labels   : (n,) int64 or None; -1 marks an unlabeled sample
    features : (n, feature_dim) float64 or None
    """

    logits: np.ndarray
    labels: np.ndarray | None = None
    features: np.ndarray | None = None

    def __post_init__(self):
        self.logits = np.atleast_2d(np.asarray(self.logits, dtype=np.float64))
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
            if len(self.labels) != self.n:
                raise DumpFormatError(
                    f"label count {len(self.labels)} != record count {self.n}"
                )
        if self.features is not None:
            self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
            if self.features.shape[0] != self.n:
                raise DumpFormatError(
                    f"feature rows {self.features.shape[0]} != record count {self.n}"
                )
        if self.num_classes == 0 and self.features is None:
            raise DumpFormatError("dump carries neither logits nor features")

    @property
    def n(self) -> int:
        return self.logits.shape[0]

    @property
    def num_classes(self) -> int:
        return self.logits.shape[1]

    @property
    def feature_dim(self) -> int:
        return 0 if self.features is None else self.features.shape[1]

    @property
    def predicted(self) -> np.ndarray:
        """Predicted class per record: argmax of logits, first index on ties."""
        if self.num_classes == 0:
            raise ValueError("raw dump has no logits to predict from")
        return np.argmax(self.logits, axis=1)

    def accuracy(self) -> float:
        """Fraction of labeled records whose predicted class matches the label."""
        if self.labels is None:
            raise ValueError("dump has no labels")
        mask = self.labels >= 0
        if not mask.any():
            raise ValueError("dump has no labeled records")
        return float(np.mean(self.predicted[mask] == self.labels[mask]))

    def records(self) -> list[ActivationRecord]:
        labels = self.labels if self.labels is not None else np.full(self.n, UNLABELED)
        return [
            ActivationRecord(
                label=int(labels[i]),
                logits=self.logits[i],
                features=None if self.features is None else self.features[i],
            )
            for i in range(self.n)
        ]

    @classmethod
    def from_records(cls, records: list[ActivationRecord]) -> "ActivationDump":
        if not records:
            raise ValueError("cannot build a dump from zero records")
        logits = np.stack([r.logits for r in records])
        labels = np.array([r.label for r in records], dtype=np.int64)
        features = None
        if records[0].features is not None:
            features = np.stack([r.features for r in records])
        return cls(logits=logits, labels=labels, features=features)


def _record_dtype(num_classes: int, feature_dim: int, flags: int) -> np.dtype:
    fields = []
    if flags & FLAG_LABELS:
        fields.append(("label", "<i4"))
    if num_classes > 0:
        fields.append(("logits", "<f4", (num_classes,)))
    if flags & FLAG_FEATURES:
        fields.append(("features", "<f4", (feature_dim,)))
    if not fields:
        raise DumpFormatError("record layout is empty (no labels, logits, or features)")
    return np.dtype(fields)


def write_dump(dump: ActivationDump, path: str | Path) -> None:
    """Write a dump in the binary interchange format.

    Round trip is bit-exact for the stored 32-bit fields.
    """
    path = Path(path)
    flags = 0
    if dump.labels is not None:
        flags |= FLAG_LABELS
    if dump.features is not None:
        flags |= FLAG_FEATURES
    header = MAGIC + _HEADER.pack(
        FORMAT_VERSION, dump.n, dump.num_classes, dump.feature_dim, flags
    )
    if dump.n == 0:
        path.write_bytes(header)
        return
    dt = _record_dtype(dump.num_classes, dump.feature_dim, flags)
    arr = np.empty(dump.n, dtype=dt)
    if flags & FLAG_LABELS:
        arr["label"] = dump.labels.astype("<i4")
    if dump.num_classes > 0:
        arr["logits"] = dump.logits.astype("<f4")
    if flags & FLAG_FEATURES:
        arr["features"] = dump.features.astype("<f4")
    path.write_bytes(header + arr.tobytes())


def read_dump(path: str | Path) -> ActivationDump:
    """Read a dump file, validating the header and payload length."""
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) < HEADER_SIZE:
        raise DumpFormatError(
            f"{path}: truncated header, {len(buf)} bytes < {HEADER_SIZE} (at byte 0)"
        )
    if buf[:4] != MAGIC:
        raise DumpFormatError(f"{path}: bad magic {buf[:4]!r} (at byte 0)")
    version, n, num_classes, feature_dim, flags = _HEADER.unpack(buf[4:HEADER_SIZE])
    if version != FORMAT_VERSION:
        raise DumpFormatError(f"{path}: unsupported version {version} (at byte 4)")
    if flags & ~(FLAG_LABELS | FLAG_FEATURES):
        raise DumpFormatError(f"{path}: unknown flag bits {flags:#x} (at byte 24)")
    if not (flags & FLAG_FEATURES) and feature_dim != 0:
        raise DumpFormatError(
            f"{path}: feature_dim {feature_dim} but features flag unset (at byte 16)"
        )
    if n == 0:
        logits = np.zeros((0, num_classes))
        labels = np.zeros(0, dtype=np.int64) if flags & FLAG_LABELS else None
        features = np.zeros((0, feature_dim)) if flags & FLAG_FEATURES else None
        return ActivationDump(logits=logits, labels=labels, features=features)
    dt = _record_dtype(num_classes, feature_dim, flags)
    expected = HEADER_SIZE + n * dt.itemsize
    if len(buf) != expected:
        raise DumpFormatError(
            f"{path}: payload length {len(buf)} != expected {expected} "
            f"(mismatch at byte {min(len(buf), expected)})"
        )
    arr = np.frombuffer(buf, dtype=dt, count=n, offset=HEADER_SIZE)
    labels = arr["label"].astype(np.int64) if flags & FLAG_LABELS else None
    if num_classes > 0:
        logits = arr["logits"].astype(np.float64)
    else:
        logits = np.zeros((n, 0))
    features = arr["features"].astype(np.float64) if flags & FLAG_FEATURES else None
    return ActivationDump(logits=logits, labels=labels, features=features)


# ---------------------------------------------------------------------------
# synthetic datasets


@dataclass
class Dataset:
    """Raw labeled vectors. Labels of -1 mark unlabeled (outlier) samples."""

    x: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.x.shape[0] != len(self.labels):
            raise ValueError("x and labels disagree on sample count")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def to_dump(self) -> ActivationDump:
        return ActivationDump(
            logits=np.zeros((self.n, 0)), labels=self.labels, features=self.x
        )

    @classmethod
    def from_dump(cls, dump: ActivationDump) -> "Dataset":
        if dump.features is None:
            raise ValueError("dump carries no feature vectors")
        labels = dump.labels
        if labels is None:
            labels = np.full(dump.n, UNLABELED, dtype=np.int64)
        return cls(x=dump.features, labels=labels)


@dataclass
class SyntheticSpec:
    """Recipe for a synthetic set: class blobs, shifted blobs, or pixel noise."""

    kind: str  # blobs | shifted_blobs | gauss_noise
    dim: int
    n_classes: int = 0
    means: np.ndarray | None = None  # (n_classes, dim)
    sigma: float = 1.0
    shift: np.ndarray | None = None  # (dim,), shifted_blobs only
    noise_mean: float = 0.5
    noise_std: float = 1.0

    def __post_init__(self):
        if self.kind not in ("blobs", "shifted_blobs", "gauss_noise"):
            raise ValueError(f"unknown synthetic kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.kind in ("blobs", "shifted_blobs"):
            if self.means is None:
                raise ValueError(f"{self.kind} requires per-class means")
            self.means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
            if self.n_classes == 0:
                self.n_classes = self.means.shape[0]
            if self.means.shape != (self.n_classes, self.dim):
                raise ValueError(
                    f"means shape {self.means.shape} != ({self.n_classes}, {self.dim})"
                )
            if self.sigma < 0:
                raise ValueError("sigma must be nonnegative")
        if self.kind == "shifted_blobs":
            if self.shift is None:
                raise ValueError("shifted_blobs requires a shift vector")
            self.shift = np.asarray(self.shift, dtype=np.float64).reshape(-1)
            if len(self.shift) != self.dim:
                raise ValueError(
                    f"shift dim {len(self.shift)} != data dim {self.dim}"
                )
        if self.kind == "gauss_noise" and self.noise_std <= 0:
            raise ValueError("noise std must be positive")


def axis_means(dim: int, n_classes: int, distance: float) -> np.ndarray:
    """Class means at `distance` from the origin along orthogonal axes.

    Pairwise separation is distance * sqrt(2).
    """
    if n_classes > dim:
        raise ValueError("need dim >= n_classes for axis-aligned means")
    means = np.zeros((n_classes, dim))
    for c in range(n_classes):
        means[c, c] = distance
    return means


def span_shift(dim: int, n_classes: int, norm: float) -> np.ndarray:
    """Shift vector of the given norm pointing away from every class mean.

    Direction is the negative diagonal of the class-mean span, so shifted
    blobs stay near the inlier cloud without landing inside another class.
    """
    u = np.zeros(dim)
    u[:n_classes] = -1.0 / np.sqrt(n_classes)
    return norm * u


def gen_blobs(spec: SyntheticSpec, n: int, seed: int) -> Dataset:
    """Class-balanced Gaussian blobs: x = mean[label] + sigma * N(0, I)."""
    if spec.kind not in ("blobs", "shifted_blobs"):
        raise ValueError(f"gen_blobs needs a blob spec, got {spec.kind!r}")
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    base, extra = divmod(n, spec.n_classes)
    counts = [base + (1 if c < extra else 0) for c in range(spec.n_classes)]
    labels = np.concatenate(
        [np.full(k, c, dtype=np.int64) for c, k in enumerate(counts)]
    )
    x = spec.means[labels] + spec.sigma * rng.standard_normal((n, spec.dim))
    return Dataset(x=x, labels=labels)


def gen_noise(
    dim: int, n: int, mean: float = 0.5, std: float = 1.0, seed: int = 0
) -> Dataset:
    """Unlabeled i.i.d. Gaussian noise vectors, entrywise N(mean, std^2)."""
    if std <= 0:
        raise ValueError("std must be positive")
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    x = mean + std * rng.standard_normal((n, dim))
    return Dataset(x=x, labels=np.full(n, UNLABELED, dtype=np.int64))


def gen_shifted(spec: SyntheticSpec, n: int, seed: int) -> Dataset:
    """Blob samples translated by the spec's shift vector, labels dropped."""
    if spec.kind != "shifted_blobs":
        raise ValueError(f"gen_shifted needs a shifted_blobs spec, got {spec.kind!r}")
    blobs = gen_blobs(spec, n, seed)
    return Dataset(
        x=blobs.x + spec.shift, labels=np.full(n, UNLABELED, dtype=np.int64)
    )
