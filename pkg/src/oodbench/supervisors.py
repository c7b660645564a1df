"""Anomaly-score producers: baseline max-softmax, ODIN, and OpenMax.

Every scorer maps one sample to a single anomaly value where larger means
more anomalous.  The baseline reads the softmax head directly; ODIN adds
temperature scaling plus an input-space perturbation against the confidence
gradient; OpenMax discounts the top-ranked class activations by extreme-value
models of the training set's distances to per-class mean activations and
routes the discounted mass to a synthetic unknown class.

All scoring is pure given an immutable model/checkpoint; fitting functions
are single-writer jobs whose outputs become immutable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import ActivationDump
from .netengine import (
    NetworkParams,
    forward,
    input_gradient,
    input_gradients,
    softmax_stable,
)


class WeibullFitError(ValueError):
    """Tail data cannot support a two-parameter Weibull fit."""


class OpenMaxFitError(ValueError):
    """Training activations cannot support an OpenMax model."""


class SupervisorInputError(ValueError):
    """A supervisor was handed data it cannot score (e.g. no raw inputs)."""


# ---------------------------------------------------------------------------
# baseline


def baseline_anomaly(logits: np.ndarray) -> float:
    """1 minus the maximum softmax probability; in [0, 1 - 1/N]."""
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    if logits.size < 2:
        raise ValueError("need at least two classes")
    return float(1.0 - softmax_stable(logits, 1.0).max())


# ---------------------------------------------------------------------------
# ODIN


@dataclass(frozen=True)
class OdinConfig:
    temperature: float
    epsilon: float  # input perturbation magnitude

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    def as_dict(self) -> dict:
        return {"temperature": self.temperature, "epsilon": self.epsilon}


def odin_anomaly(params: NetworkParams, x: np.ndarray, cfg: OdinConfig) -> float:
    """Perturb x against the confidence gradient, rescore with temperature.

    x_t = x - epsilon * sign(d/dx -log max softmax(logits / T));
    anomaly = 1 - max softmax(forward(x_t) / T).
    """
    x = np.asarray(x, dtype=np.float64)
    g = input_gradient(params, x, cfg.temperature)
    x_t = x - cfg.epsilon * np.sign(g)
    logits, _ = forward(params, x_t)
    return float(1.0 - softmax_stable(logits, cfg.temperature).max())


def odin_scores(
    params: NetworkParams, batch: np.ndarray, cfg: OdinConfig
) -> np.ndarray:
    """Vectorized odin_anomaly over the rows of a batch."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    g = input_gradients(params, batch, cfg.temperature)
    perturbed = batch - cfg.epsilon * np.sign(g)
    logits, _ = forward(params, perturbed)
    p = softmax_stable(logits, cfg.temperature)
    return 1.0 - p.max(axis=1)


# ---------------------------------------------------------------------------
# Weibull tail models


@dataclass(frozen=True)
class WeibullModel:
    shape: float
    scale: float

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("Weibull shape and scale must be positive")


def weibull_cdf(d, model: WeibullModel):
    """1 - exp(-(d / scale)^shape); accepts a scalar or an array."""
    d = np.asarray(d, dtype=np.float64)
    if (d < 0).any():
        raise ValueError("Weibull CDF domain is d >= 0")
    out = 1.0 - np.exp(-((d / model.scale) ** model.shape))
    return float(out) if out.ndim == 0 else out


def weibull_fit_tail(
    distances, tail: int, *, rel_tol: float = 1e-10, max_iter: int = 200
) -> WeibullModel:
    """Maximum-likelihood Weibull fit on the `tail` largest distances.

    Solves the profile shape equation by Newton iteration (the profile is
    strictly monotone, so the iteration is safe with a positivity guard),
    then recovers the scale in closed form.  Deterministic and seedless.
    """
    d = np.sort(np.asarray(distances, dtype=np.float64).reshape(-1))
    if tail < 2:
        raise WeibullFitError("tail length must be at least 2")
    if len(d) < tail:
        raise WeibullFitError(f"tail {tail} exceeds sample count {len(d)}")
    t = d[-tail:]
    if t[0] == t[-1]:
        raise WeibullFitError("degenerate tail: all values identical")
    if t[0] <= 0:
        raise WeibullFitError("tail contains non-positive distances")

    # normalize by the max for overflow-free powers; the shape equation is
    # scale-invariant, only the closed-form scale needs undoing
    top = t[-1]
    u = t / top
    logu = np.log(u)
    mean_logu = logu.mean()

    k = 1.2826 / max(float(np.std(logu)), 1e-300)
    for _ in range(max_iter):
        w = u**k
        s0 = w.sum()
        s1 = (w * logu).sum()
        s2 = (w * logu * logu).sum()
        f = s1 / s0 - 1.0 / k - mean_logu
        fp = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (k * k)
        k_new = k - f / fp
        if k_new <= 0:
            k_new = k / 2.0
        if abs(k_new - k) <= rel_tol * max(abs(k_new), abs(k)):
            k = k_new
            break
        k = k_new
    else:
        raise WeibullFitError(f"shape equation did not converge in {max_iter} iterations")

    lam = float(top * float(np.mean(u**k)) ** (1.0 / k))
    return WeibullModel(shape=float(k), scale=lam)


# ---------------------------------------------------------------------------
# OpenMax


@dataclass(frozen=True)
class OpenMaxConfig:
    tail: int  # extreme-value tail length
    alpha: int  # number of top-ranked classes to revise
    distance: str = "euclidean"
    use_features: bool = False  # measure distances on the feature layer

    def __post_init__(self):
        if self.tail < 2:
            raise ValueError("tail must be at least 2")
        if self.alpha < 1:
            raise ValueError("alpha must be at least 1")
        if self.distance != "euclidean":
            raise ValueError(f"unsupported distance {self.distance!r}")

    def as_dict(self) -> dict:
        return {"tail": self.tail, "alpha": self.alpha}


@dataclass
class OpenMaxModel:
    """Per-class mean activation vectors with fitted Weibull tail models."""

    mavs: np.ndarray  # (n_classes, dim) in class order 0..n_classes-1
    weibulls: list[WeibullModel]
    config: OpenMaxConfig

    def __post_init__(self):
        self.mavs = np.atleast_2d(np.asarray(self.mavs, dtype=np.float64))
        if len(self.weibulls) != self.mavs.shape[0]:
            raise ValueError("one Weibull model per class required")
        if self.config.alpha > self.mavs.shape[0]:
            raise ValueError("alpha exceeds the number of classes")

    @property
    def n_classes(self) -> int:
        return self.mavs.shape[0]


def openmax_fit(train: ActivationDump | list, cfg: OpenMaxConfig) -> OpenMaxModel:
    """Fit per-class MAVs and Weibull tails on correctly classified samples.

    Every class 0..N-1 must contribute at least `tail` correctly classified
    samples; distances are Euclidean from each sample's vector to its class
    MAV.  Distances are measured on logits unless cfg.use_features is set.
    """
    if isinstance(train, list):
        train = ActivationDump.from_records(train)
    if train.labels is None:
        raise OpenMaxFitError("training dump has no labels")
    if train.num_classes < 2:
        raise OpenMaxFitError("training dump has no logits to fit on")
    if cfg.use_features and train.features is None:
        raise OpenMaxFitError("use_features set but dump has no features")
    if cfg.alpha > train.num_classes:
        raise OpenMaxFitError(
            f"alpha {cfg.alpha} exceeds class count {train.num_classes}"
        )
    vectors = train.features if cfg.use_features else train.logits
    predicted = train.predicted
    mavs = []
    weibulls = []
    for j in range(train.num_classes):
        mask = (train.labels == j) & (predicted == j)
        count = int(mask.sum())
        if count < cfg.tail:
            raise OpenMaxFitError(
                f"class {j}: {count} correctly classified samples < tail {cfg.tail}"
            )
        mav = vectors[mask].mean(axis=0)
        dists = np.linalg.norm(vectors[mask] - mav, axis=1)
        try:
            weibulls.append(weibull_fit_tail(dists, cfg.tail))
        except WeibullFitError as e:
            raise OpenMaxFitError(f"class {j}: {e}") from e
        mavs.append(mav)
    return OpenMaxModel(mavs=np.stack(mavs), weibulls=weibulls, config=cfg)


def openmax_revise(
    model: OpenMaxModel, logits: np.ndarray, features: np.ndarray | None = None
) -> tuple[np.ndarray, float]:
    """Discount the top-alpha activations, returning (revised, unknown).

    For rank r = 1..alpha over classes sorted by logit descending, the class
    keeps the fraction omega = 1 - ((alpha - r + 1) / alpha) * cdf(distance
    to its MAV); the removed mass sum(v * (1 - omega)) becomes the unknown
    activation.  Unranked classes are untouched.
    """
    v = np.asarray(logits, dtype=np.float64).reshape(-1)
    n = model.n_classes
    if v.size != n:
        raise ValueError(f"logit width {v.size} != class count {n}")
    if model.config.use_features:
        if features is None:
            raise SupervisorInputError(
                "model measures feature-layer distances but no features given"
            )
        vec = np.asarray(features, dtype=np.float64).reshape(-1)
    else:
        vec = v
    alpha = model.config.alpha
    order = np.argsort(-v, kind="stable")
    omega = np.ones(n)
    for r in range(1, alpha + 1):
        j = int(order[r - 1])
        dist = float(np.linalg.norm(vec - model.mavs[j]))
        omega[j] = 1.0 - ((alpha - r + 1) / alpha) * weibull_cdf(dist, model.weibulls[j])
    revised = v * omega
    unknown = float(np.dot(v, 1.0 - omega))
    return revised, unknown


def openmax_anomaly(
    model: OpenMaxModel, logits: np.ndarray, features: np.ndarray | None = None
) -> float:
    """1 minus the maximum known-class probability after revision.

    The softmax runs over the N+1 vector (unknown, revised classes); the max
    excludes the unknown slot so that growing unknown mass monotonically
    raises the anomaly score.
    """
    revised, unknown = openmax_revise(model, logits, features)
    p = softmax_stable(np.concatenate(([unknown], revised)), 1.0)
    return float(1.0 - p[1:].max())


def save_openmax_model(model: OpenMaxModel, path: str | Path) -> None:
    """JSON document with numbers at 17 significant digits for exact round trip."""

    def num(x: float) -> str:
        return format(float(x), ".17g")

    classes = []
    for j in range(model.n_classes):
        classes.append(
            "      {\n"
            f'        "label": {j},\n'
            f'        "mav": [{", ".join(num(x) for x in model.mavs[j])}],\n'
            f'        "weibull": {{"shape": {num(model.weibulls[j].shape)}, '
            f'"scale": {num(model.weibulls[j].scale)}}},\n'
            f'        "tail": {model.config.tail},\n'
            f'        "alpha": {model.config.alpha}\n'
            "      }"
        )
    doc = '{\n  "classes": [\n' + ",\n".join(classes) + "\n  ]\n}\n"
    Path(path).write_text(doc)


def load_openmax_model(path: str | Path) -> OpenMaxModel:
    doc = json.loads(Path(path).read_text())
    classes = sorted(doc["classes"], key=lambda c: c["label"])
    if [c["label"] for c in classes] != list(range(len(classes))):
        raise ValueError("class labels must be contiguous from 0")
    mavs = np.array([c["mav"] for c in classes], dtype=np.float64)
    weibulls = [
        WeibullModel(c["weibull"]["shape"], c["weibull"]["scale"]) for c in classes
    ]
    cfg = OpenMaxConfig(tail=classes[0]["tail"], alpha=classes[0]["alpha"])
    return OpenMaxModel(mavs=mavs, weibulls=weibulls, config=cfg)


# ---------------------------------------------------------------------------
# supervisor objects (vectorized scoring over dumps)


@dataclass
class BaselineSupervisor:
    """Parameterless max-softmax supervisor over stored or computed logits."""

    name: str = field(default="baseline", init=False)

    def config_dict(self) -> dict:
        return {}

    def scores(self, dump: ActivationDump) -> np.ndarray:
        if dump.num_classes < 2:
            raise SupervisorInputError("baseline needs logits with >= 2 classes")
        p = softmax_stable(dump.logits, 1.0)
        return 1.0 - p.max(axis=1)


@dataclass
class OdinSupervisor:
    """Gradient-perturbation supervisor; needs raw inputs and the network."""

    params: NetworkParams
    config: OdinConfig
    name: str = field(default="odin", init=False)

    def config_dict(self) -> dict:
        return self.config.as_dict()

    def scores(self, dump: ActivationDump) -> np.ndarray:
        if dump.features is None:
            raise SupervisorInputError(
                "odin needs raw input vectors; activation-only dumps "
                "support baseline and openmax"
            )
        return odin_scores(self.params, dump.features, self.config)


@dataclass
class OpenMaxSupervisor:
    model: OpenMaxModel
    name: str = field(default="openmax", init=False)

    def config_dict(self) -> dict:
        return self.model.config.as_dict()

    def scores(self, dump: ActivationDump) -> np.ndarray:
        if dump.num_classes != self.model.n_classes:
            raise SupervisorInputError(
                f"dump has {dump.num_classes} classes, model {self.model.n_classes}"
            )
        feats = dump.features if self.model.config.use_features else [None] * dump.n
        if self.model.config.use_features and dump.features is None:
            raise SupervisorInputError("model needs feature vectors to score")
        return np.array(
            [
                openmax_anomaly(self.model, dump.logits[i], feats[i])
                for i in range(dump.n)
            ]
        )


SUPERVISOR_KINDS = ("baseline", "odin", "openmax")


# ---------------------------------------------------------------------------
# parameter grid search

DEFAULT_ODIN_TEMPERATURES = (50.0, 100.0, 200.0, 500.0, 700.0, 1000.0, 1500.0, 2000.0)
DEFAULT_ODIN_EPSILONS = tuple(np.linspace(0.0, 0.004, 21))
DEFAULT_OPENMAX_TAILS = (5, 10, 20, 50, 100)
DEFAULT_OPENMAX_ALPHAS = tuple(range(1, 11))


@dataclass
class GridRow:
    config: dict
    aurocs: dict[str, float] | None  # per OOD set; None when the fit failed
    mean_auroc: float | None
    note: str = ""


@dataclass
class GridResult:
    kind: str
    config: dict  # winning config, JSON-ready
    mean_auroc: float
    rows: list[GridRow]


def _mean_auroc(aurocs: dict[str, float]) -> float:
    # summing in sorted value order makes the mean independent of the
    # caller's dataset ordering
    return float(np.mean(sorted(aurocs.values())))


def _auroc_between(inlier_scores: np.ndarray, outlier_scores: np.ndarray) -> float:
    """AUROC of the two score sets, via the shared grouped-ROC metric."""
    from .metrics import ScoredSample, auroc

    samples = [ScoredSample(float(a), False) for a in inlier_scores]
    samples += [ScoredSample(float(a), True) for a in outlier_scores]
    return auroc(samples)


def grid_search(
    kind: str,
    inlier_dump: ActivationDump,
    ood_dumps: dict[str, ActivationDump],
    *,
    params: NetworkParams | None = None,
    train_dump: ActivationDump | None = None,
    odin_temperatures=DEFAULT_ODIN_TEMPERATURES,
    odin_epsilons=DEFAULT_ODIN_EPSILONS,
    openmax_tails=DEFAULT_OPENMAX_TAILS,
    openmax_alphas=DEFAULT_OPENMAX_ALPHAS,
) -> GridResult:
    """Pick the config with the best mean AUROC across the given OOD sets.

    One config is chosen per model and reused for every OOD set afterwards.
    Ties break toward the earlier config in grid enumeration order.  Configs
    whose OpenMax fit fails (tail too long for the available correct samples)
    are recorded in the table but excluded from the argmax.
    """
    if kind not in SUPERVISOR_KINDS:
        raise ValueError(f"unknown supervisor kind {kind!r}")
    if not ood_dumps:
        raise ValueError("grid search needs at least one OOD dataset")
    if inlier_dump.n == 0 or any(d.n == 0 for d in ood_dumps.values()):
        raise ValueError("grid search needs non-empty datasets")

    def evaluate(supervisor) -> dict[str, float]:
        inl = supervisor.scores(inlier_dump)
        return {
            name: _auroc_between(inl, supervisor.scores(dump))
            for name, dump in ood_dumps.items()
        }

    rows: list[GridRow] = []
    if kind == "baseline":
        aurocs = evaluate(BaselineSupervisor())
        rows.append(GridRow({}, aurocs, _mean_auroc(aurocs)))
    elif kind == "odin":
        if params is None:
            raise ValueError("odin grid search needs network parameters")
        if not odin_temperatures or len(odin_epsilons) == 0:
            raise ValueError("empty odin grid")
        for t in odin_temperatures:
            for eps in odin_epsilons:
                cfg = OdinConfig(temperature=float(t), epsilon=float(eps))
                aurocs = evaluate(OdinSupervisor(params, cfg))
                rows.append(GridRow(cfg.as_dict(), aurocs, _mean_auroc(aurocs)))
    else:
        if train_dump is None:
            raise ValueError("openmax grid search needs a training dump")
        if not openmax_tails or not openmax_alphas:
            raise ValueError("empty openmax grid")
        n_classes = inlier_dump.num_classes
        alphas = [a for a in openmax_alphas if a <= n_classes]
        for tail in openmax_tails:
            base_model = None
            fit_note = ""
            try:
                base_model = openmax_fit(train_dump, OpenMaxConfig(tail=tail, alpha=1))
            except OpenMaxFitError as e:
                fit_note = str(e)
            for alpha in alphas:
                cfg = OpenMaxConfig(tail=tail, alpha=alpha)
                if base_model is None:
                    rows.append(GridRow(cfg.as_dict(), None, None, note=fit_note))
                    continue
                model = OpenMaxModel(base_model.mavs, base_model.weibulls, cfg)
                aurocs = evaluate(OpenMaxSupervisor(model))
                rows.append(GridRow(cfg.as_dict(), aurocs, _mean_auroc(aurocs)))

    best: GridRow | None = None
    for row in rows:
        if row.mean_auroc is None:
            continue
        if best is None or row.mean_auroc > best.mean_auroc:
            best = row
    if best is None:
        raise OpenMaxFitError("every grid config failed to fit")
    return GridResult(kind=kind, config=best.config, mean_auroc=best.mean_auroc, rows=rows)
