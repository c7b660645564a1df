"""Minimal dense feed-forward network with exact forward and backward passes.

Everything runs in 64-bit floats on numpy arrays.  The engine supports
SGD-with-momentum training with a step learning-rate decay, periodic
checkpointing plus a tagged best-test-accuracy checkpoint, and the
input-space gradients that gradient-based anomaly scorers need.

Pure functions (forward, softmax, gradients) are safe to call from many
threads; training is single-threaded per run and parameters are never
mutated once a checkpoint has been emitted.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import Dataset


class ShapeError(ValueError):
    """Array dimensions do not match the network layout."""


class NumericError(ArithmeticError):
    """A non-finite value appeared where the math requires finite ones."""


# ---------------------------------------------------------------------------
# network description and parameters


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # dense | relu
    in_dim: int
    out_dim: int
    seed: int = 0  # weight-init stream, dense layers only


@dataclass(frozen=True)
class NetworkSpec:
    """Layer list; consecutive dims must chain and the last layer is dense."""

    layers: tuple[LayerSpec, ...]
    init_scale: float = 1.0  # multiplier on the uniform init bound

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("network needs at least one layer")
        prev = None
        n_dense = 0
        for i, layer in enumerate(self.layers):
            if layer.kind not in ("dense", "relu"):
                raise ShapeError(f"layer {i}: unknown kind {layer.kind!r}")
            if layer.in_dim < 1 or layer.out_dim < 1:
                raise ShapeError(f"layer {i}: dims must be positive")
            if layer.kind == "relu" and layer.in_dim != layer.out_dim:
                raise ShapeError(f"layer {i}: relu cannot change width")
            if prev is not None and layer.in_dim != prev:
                raise ShapeError(
                    f"layer {i}: in_dim {layer.in_dim} != previous out_dim {prev}"
                )
            prev = layer.out_dim
            n_dense += layer.kind == "dense"
        if n_dense == 0:
            raise ShapeError("network needs at least one dense layer")
        if self.layers[-1].kind != "dense":
            raise ShapeError("final layer must be dense (raw logits)")
        if self.init_scale <= 0:
            raise ShapeError("init_scale must be positive")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def n_classes(self) -> int:
        return self.layers[-1].out_dim


def mlp_spec(
    in_dim: int,
    hidden: tuple[int, ...] | list[int],
    n_classes: int,
    seed: int = 0,
    init_scale: float = 1.0,
) -> NetworkSpec:
    """Dense/relu stack: in -> hidden[0] -> relu -> ... -> n_classes."""
    dims = [in_dim, *hidden, n_classes]
    layer_seeds = np.random.SeedSequence(seed).generate_state(len(dims) - 1)
    layers: list[LayerSpec] = []
    for i in range(len(dims) - 1):
        layers.append(LayerSpec("dense", dims[i], dims[i + 1], int(layer_seeds[i])))
        if i < len(dims) - 2:
            layers.append(LayerSpec("relu", dims[i + 1], dims[i + 1]))
    return NetworkSpec(layers=tuple(layers), init_scale=init_scale)


@dataclass
class DenseLayer:
    weights: np.ndarray  # (in_dim, out_dim)
    bias: np.ndarray  # (out_dim,)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.weights.ndim != 2 or self.weights.shape[1] != len(self.bias):
            raise ShapeError(
                f"weights {self.weights.shape} incompatible with bias {self.bias.shape}"
            )
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise NumericError("non-finite layer parameters")

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.bias.copy())


@dataclass
class NetworkParams:
    """Dense layer parameters plus the relu placement between them."""

    dense: list[DenseLayer]
    relu_after: tuple[bool, ...]  # per dense layer; the final entry is False

    def __post_init__(self):
        if len(self.dense) != len(self.relu_after):
            raise ShapeError("relu_after must have one entry per dense layer")
        if self.relu_after and self.relu_after[-1]:
            raise ShapeError("no activation after the final dense layer")

    @property
    def in_dim(self) -> int:
        return self.dense[0].weights.shape[0]

    @property
    def n_classes(self) -> int:
        return self.dense[-1].weights.shape[1]

    def copy(self) -> "NetworkParams":
        return NetworkParams([d.copy() for d in self.dense], self.relu_after)


def init_params(spec: NetworkSpec) -> NetworkParams:
    """Seeded uniform init in +-init_scale * sqrt(6 / (fan_in + fan_out)), zero bias."""
    dense: list[DenseLayer] = []
    relu_after: list[bool] = []
    layers = spec.layers
    for i, layer in enumerate(layers):
        if layer.kind != "dense":
            continue
        rng = np.random.default_rng(layer.seed)
        lim = spec.init_scale * np.sqrt(6.0 / (layer.in_dim + layer.out_dim))
        w = rng.uniform(-lim, lim, size=(layer.in_dim, layer.out_dim))
        dense.append(DenseLayer(w, np.zeros(layer.out_dim)))
        relu_after.append(i + 1 < len(layers) and layers[i + 1].kind == "relu")
    return NetworkParams(dense=dense, relu_after=tuple(relu_after))


# ---------------------------------------------------------------------------
# forward / backward


def _as_batch(x: np.ndarray, in_dim: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != in_dim:
        raise ShapeError(f"input shape {x.shape} incompatible with in_dim {in_dim}")
    return x, single


def _trace(params: NetworkParams, x: np.ndarray):
    """Forward pass keeping per-layer inputs and pre-activations for backprop.

    Overflow is left silent here; callers check finiteness and raise
    NumericError with context.
    """
    inputs = []  # activation entering each dense layer
    preacts = []  # dense layer outputs before any relu
    h = x
    with np.errstate(over="ignore", invalid="ignore"):
        for layer, relu in zip(params.dense, params.relu_after):
            inputs.append(h)
            z = h @ layer.weights + layer.bias
            preacts.append(z)
            h = np.maximum(z, 0.0) if relu else z
    return inputs, preacts


def forward(params: NetworkParams, batch: np.ndarray):
    """Compute (logits, penultimate) for a batch.

    ``penultimate`` is the activation entering the final dense layer.  A 1-D
    input is treated as a single sample and 1-D outputs are returned.
    """
    x, single = _as_batch(batch, params.in_dim)
    inputs, preacts = _trace(params, x)
    logits = preacts[-1]
    penultimate = inputs[-1]
    if not np.isfinite(logits).all():
        raise NumericError("non-finite logits in forward pass")
    if single:
        return logits[0], penultimate[0]
    return logits, penultimate


def softmax_stable(v: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Temperature-scaled softmax over the last axis, max-subtracted for stability.

    softmax_stable(v, T) == softmax_stable(v / T, 1) exactly by construction.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] == 0:
        raise ValueError("softmax of an empty vector")
    if not np.isfinite(v).all():
        raise NumericError("non-finite softmax input")
    z = v / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def input_gradients(
    params: NetworkParams, batch: np.ndarray, temperature: float
) -> np.ndarray:
    """Row-wise gradient w.r.t. the inputs of the max-probability NLL.

    For each row x the differentiated loss is
    -log softmax(logits / T)[argmax logits], the quantity whose sign-gradient
    the ODIN perturbation steps against.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    x, single = _as_batch(batch, params.in_dim)
    inputs, preacts = _trace(params, x)
    logits = preacts[-1]
    if not np.isfinite(logits).all():
        raise NumericError("non-finite logits while differentiating")
    p = softmax_stable(logits, temperature)
    top = np.argmax(logits, axis=1)
    g = p.copy()
    g[np.arange(len(g)), top] -= 1.0
    g /= temperature
    for i in range(len(params.dense) - 1, -1, -1):
        g = g @ params.dense[i].weights.T
        if i > 0 and params.relu_after[i - 1]:
            g = g * (preacts[i - 1] > 0)
    if not np.isfinite(g).all():
        raise NumericError("non-finite input gradient")
    return g[0] if single else g


def input_gradient(
    params: NetworkParams, x: np.ndarray, temperature: float
) -> np.ndarray:
    """Single-sample input gradient; same shape as x."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2 and x.shape[0] == 1:
        return input_gradients(params, x, temperature)
    if x.ndim != 1:
        raise ShapeError("input_gradient expects a single sample")
    return input_gradients(params, x, temperature)


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainSchedule:
    """Epoch budget, step sizes, and checkpoint cadence for one training run.

    drop_epochs are fractions of total_epochs in (0, 1); on passing each one
    the learning rate is divided by drop_factor.
    """

    total_epochs: int = 60
    batch_size: int = 128
    base_lr: float = 0.01
    drop_epochs: tuple[float, ...] = (0.5, 0.75)
    drop_factor: float = 10.0
    momentum: float = 0.9
    checkpoint_every: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.total_epochs < 0:
            raise ValueError("total_epochs must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.base_lr <= 0:
            raise ValueError("base_lr must be positive")
        if self.drop_factor <= 0:
            raise ValueError("drop_factor must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")
        if self.total_epochs and self.total_epochs % self.checkpoint_every:
            raise ValueError("checkpoint_every must divide total_epochs")
        last = 0.0
        for f in self.drop_epochs:
            if not 0 < f < 1:
                raise ValueError("drop epochs are fractions in (0, 1)")
            if f <= last:
                raise ValueError("drop epochs must be strictly increasing")
            last = f
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


def lr_at_epoch(schedule: TrainSchedule, epoch: int) -> float:
    """Base rate divided by drop_factor once per passed drop point."""
    if not 0 <= epoch < schedule.total_epochs:
        raise ValueError(
            f"epoch {epoch} outside [0, {schedule.total_epochs})"
        )
    drops = sum(
        epoch >= int(f * schedule.total_epochs) for f in schedule.drop_epochs
    )
    return schedule.base_lr / schedule.drop_factor**drops


GradList = list[tuple[np.ndarray, np.ndarray]]


def zero_velocity(params: NetworkParams) -> GradList:
    return [
        (np.zeros_like(d.weights), np.zeros_like(d.bias)) for d in params.dense
    ]


def sgd_momentum_step(
    params: NetworkParams,
    grads: GradList,
    velocity: GradList,
    lr: float,
    momentum: float,
) -> tuple[NetworkParams, GradList]:
    """velocity' = momentum * velocity + grads; params' = params - lr * velocity'."""
    if len(grads) != len(params.dense) or len(velocity) != len(params.dense):
        raise ShapeError("grads/velocity layer count mismatch")
    new_dense: list[DenseLayer] = []
    new_velocity: GradList = []
    for layer, (gw, gb), (vw, vb) in zip(params.dense, grads, velocity):
        if gw.shape != layer.weights.shape or gb.shape != layer.bias.shape:
            raise ShapeError("gradient shape mismatch")
        if vw.shape != layer.weights.shape or vb.shape != layer.bias.shape:
            raise ShapeError("velocity shape mismatch")
        vw2 = momentum * vw + gw
        vb2 = momentum * vb + gb
        new_velocity.append((vw2, vb2))
        new_dense.append(
            DenseLayer(layer.weights - lr * vw2, layer.bias - lr * vb2)
        )
    return NetworkParams(new_dense, params.relu_after), new_velocity


def _loss_and_grads(params: NetworkParams, xb: np.ndarray, yb: np.ndarray):
    """Mean cross-entropy over the batch and its parameter gradients.

    A diverged run produces a non-finite loss rather than a warning; the
    caller turns that into a NumericError with epoch/batch context.
    """
    inputs, preacts = _trace(params, xb)
    logits = preacts[-1]
    with np.errstate(over="ignore", invalid="ignore"):
        logp = _log_softmax(logits)
        loss = -float(np.mean(logp[np.arange(len(yb)), yb]))
        g = np.exp(logp)
        g[np.arange(len(yb)), yb] -= 1.0
        g /= len(yb)
        grads: GradList = [None] * len(params.dense)  # type: ignore[list-item]
        for i in range(len(params.dense) - 1, -1, -1):
            grads[i] = (inputs[i].T @ g, g.sum(axis=0))
            if i > 0:
                g = (g @ params.dense[i].weights.T) * (preacts[i - 1] > 0)
    return loss, grads


def classification_accuracy(params: NetworkParams, data: Dataset) -> float:
    logits, _ = forward(params, data.x)
    return float(np.mean(np.argmax(logits, axis=1) == data.labels))


@dataclass
class Checkpoint:
    epoch: int
    params: NetworkParams
    train_accuracy: float
    test_accuracy: float
    is_best: bool = False

    def __post_init__(self):
        if not 0 <= self.train_accuracy <= 1 or not 0 <= self.test_accuracy <= 1:
            raise ValueError("accuracies must lie in [0, 1]")


@dataclass
class EpochStats:
    epoch: int
    loss: float
    train_accuracy: float
    test_accuracy: float


@dataclass
class TrainResult:
    checkpoints: list[Checkpoint]  # periodic, in epoch order
    best: Checkpoint  # earliest epoch attaining the max test accuracy
    history: list[EpochStats] = field(default_factory=list)

    def all_checkpoints(self) -> list[Checkpoint]:
        """Periodic checkpoints plus the tagged best model."""
        return [*self.checkpoints, self.best]


def train(
    spec: NetworkSpec,
    train_set: Dataset,
    test_set: Dataset,
    schedule: TrainSchedule,
) -> TrainResult:
    """SGD-with-momentum training with periodic and best checkpoints.

    Deterministic for a fixed schedule seed: the shuffling stream is drawn
    from one seeded generator and nothing else is stochastic.
    """
    if train_set.n == 0 or test_set.n == 0:
        raise ValueError("empty dataset")
    if schedule.total_epochs == 0:
        raise ValueError("degenerate schedule: total_epochs == 0")
    if train_set.dim != spec.in_dim:
        raise ShapeError(
            f"data dim {train_set.dim} != network in_dim {spec.in_dim}"
        )
    if (train_set.labels < 0).any():
        raise ValueError("training set contains unlabeled samples")
    if int(train_set.labels.max()) >= spec.n_classes:
        raise ValueError("label outside the network's class range")

    rng = np.random.default_rng(schedule.seed)
    params = init_params(spec)
    velocity = zero_velocity(params)
    checkpoints: list[Checkpoint] = []
    history: list[EpochStats] = []
    best: Checkpoint | None = None

    for epoch in range(schedule.total_epochs):
        lr = lr_at_epoch(schedule, epoch)
        perm = rng.permutation(train_set.n)
        loss_sum = 0.0
        for b, start in enumerate(range(0, train_set.n, schedule.batch_size)):
            idx = perm[start : start + schedule.batch_size]
            loss, grads = _loss_and_grads(params, train_set.x[idx], train_set.labels[idx])
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, batch {b}"
                )
            loss_sum += loss * len(idx)
            try:
                params, velocity = sgd_momentum_step(
                    params, grads, velocity, lr, schedule.momentum
                )
            except NumericError as e:
                raise NumericError(f"{e} at epoch {epoch}, batch {b}") from e
        train_acc = classification_accuracy(params, train_set)
        test_acc = classification_accuracy(params, test_set)
        done = epoch + 1
        history.append(EpochStats(done, loss_sum / train_set.n, train_acc, test_acc))
        snapshot = None
        if done % schedule.checkpoint_every == 0:
            snapshot = Checkpoint(done, params.copy(), train_acc, test_acc)
            checkpoints.append(snapshot)
        if best is None or test_acc > best.test_accuracy:
            best = Checkpoint(done, params.copy(), train_acc, test_acc, is_best=True)

    assert best is not None
    return TrainResult(checkpoints=checkpoints, best=best, history=history)


# ---------------------------------------------------------------------------
# checkpoint files

CKPT_MAGIC = b"OODC"
CKPT_VERSION = 1


class CheckpointFormatError(ValueError):
    """A checkpoint file violates the on-disk format."""


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    """Binary layout: magic, version u32, epoch u32, layer count u32, then per
    dense layer rows u32, cols u32, row-major f64 weights, f64 bias, and the
    trailing train/test accuracies as two f64. All little-endian.
    """
    parts = [
        CKPT_MAGIC,
        struct.pack("<III", CKPT_VERSION, ckpt.epoch, len(ckpt.params.dense)),
    ]
    for layer in ckpt.params.dense:
        rows, cols = layer.weights.shape
        parts.append(struct.pack("<II", rows, cols))
        parts.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    parts.append(struct.pack("<dd", ckpt.train_accuracy, ckpt.test_accuracy))
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Read a checkpoint; relu is assumed between consecutive dense layers."""
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) < 16:
        raise CheckpointFormatError(f"{path}: truncated header")
    if buf[:4] != CKPT_MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {buf[:4]!r}")
    version, epoch, n_layers = struct.unpack_from("<III", buf, 4)
    if version != CKPT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported version {version}")
    offset = 16
    dense: list[DenseLayer] = []
    for i in range(n_layers):
        if offset + 8 > len(buf):
            raise CheckpointFormatError(f"{path}: truncated at layer {i} header")
        rows, cols = struct.unpack_from("<II", buf, offset)
        offset += 8
        need = 8 * (rows * cols + cols)
        if offset + need > len(buf):
            raise CheckpointFormatError(f"{path}: truncated at layer {i} payload")
        w = np.frombuffer(buf, dtype="<f8", count=rows * cols, offset=offset)
        offset += 8 * rows * cols
        b = np.frombuffer(buf, dtype="<f8", count=cols, offset=offset)
        offset += 8 * cols
        dense.append(DenseLayer(w.reshape(rows, cols).copy(), b.copy()))
    if offset + 16 != len(buf):
        raise CheckpointFormatError(f"{path}: trailing length mismatch at byte {offset}")
    train_acc, test_acc = struct.unpack_from("<dd", buf, offset)
    if not dense:
        raise CheckpointFormatError(f"{path}: zero layers")
    relu_after = tuple([True] * (len(dense) - 1) + [False])
    params = NetworkParams(dense, relu_after)
    return Checkpoint(epoch, params, train_acc, test_acc)
