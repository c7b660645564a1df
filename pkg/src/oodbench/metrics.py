"""Threshold-sweep metrics over anomaly-scored inlier/outlier samples.

Conventions, fixed across every metric here:

* a sample is ACCEPTED iff anomaly < threshold (strict), rejected otherwise;
* a rejected outlier is a true positive, a rejected inlier a false positive;
* tied anomaly values flip together (a threshold between equal scores is not
  realizable), so curves are built per distinct score plus the two extremes;
* an accepted outlier always counts as an error in coverage accuracy;
* the empty accepted set (reject everything) has accuracy 1 by convention.

All functions are pure over immutable sample lists and safe to parallelize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataio import ActivationDump


class MetricsError(ValueError):
    """Samples cannot support the requested metric."""


@dataclass(frozen=True)
class ScoredSample:
    """One scored sample: anomaly value, origin flag, and (for inliers)
    whether the classifier got it right.  Outliers are always wrong when
    accepted, so inlier_correct is ignored for them."""

    anomaly: float
    is_outlier: bool
    inlier_correct: bool = False


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


@dataclass(frozen=True)
class CoveragePoint:
    coverage: float
    accuracy: float


def apply_threshold(anomaly: float, threshold: float) -> bool:
    """True (accept as inlier) iff anomaly < threshold, strictly."""
    return anomaly < threshold


def _sorted_arrays(samples: list[ScoredSample]):
    if not samples:
        raise MetricsError("no samples")
    anomalies = np.array([s.anomaly for s in samples], dtype=np.float64)
    if not np.isfinite(anomalies).all():
        raise MetricsError("non-finite anomaly score")
    outlier = np.array([s.is_outlier for s in samples], dtype=bool)
    correct = np.array(
        [s.inlier_correct and not s.is_outlier for s in samples], dtype=bool
    )
    order = np.argsort(anomalies, kind="stable")
    return anomalies[order], outlier[order], correct[order]


def _group_prefixes(anomalies: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct sorted values and the prefix length strictly below each one."""
    values, starts = np.unique(anomalies, return_index=True)
    return values, starts


def roc_curve(samples: list[ScoredSample]) -> list[RocPoint]:
    """Grouped ROC: one point per distinct anomaly value plus both extremes.

    Points are sorted by threshold ascending, running from reject-all
    (TPR 1, FPR 1) down to accept-all (0, 0).
    """
    anomalies, outlier, _ = _sorted_arrays(samples)
    n_out = int(outlier.sum())
    n_in = len(outlier) - n_out
    if n_out == 0 or n_in == 0:
        raise MetricsError("need both distributions (inliers and outliers)")
    values, starts = _group_prefixes(anomalies)
    out_prefix = np.concatenate(([0], np.cumsum(outlier)))
    points: list[RocPoint] = []

    def point(threshold: float, accepted: int) -> RocPoint:
        fn = int(out_prefix[accepted])  # accepted outliers
        tn = accepted - fn  # accepted inliers
        tp = n_out - fn
        fp = n_in - tn
        return RocPoint(threshold, tp / n_out, fp / n_in)

    points.append(point(-math.inf, 0))
    for v, start in zip(values, starts):
        points.append(point(float(v), int(start)))
    points.append(point(math.inf, len(samples)))
    return points


def auroc(samples: list[ScoredSample]) -> float:
    """Trapezoidal area under the grouped ROC.

    Equals the probability that a random outlier outscores a random inlier,
    with ties credited one half.
    """
    points = roc_curve(samples)
    area = 0.0
    # threshold-descending order walks the curve from (0,0) to (1,1)
    for a, b in zip(points[::-1], points[-2::-1]):
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0
    return area


def fpr_at_tpr(samples: list[ScoredSample], level: float = 0.95) -> float:
    """Minimum FPR among realizable thresholds whose TPR is at least `level`."""
    if not 0 < level <= 1:
        raise MetricsError("level must lie in (0, 1]")
    points = roc_curve(samples)
    return min(p.fpr for p in points if p.tpr >= level)


def coverage_curve(samples: list[ScoredSample]) -> list[CoveragePoint]:
    """Accuracy of the accepted set at every realizable acceptance level.

    Ascending acceptance, starting from the reject-all point (coverage 0,
    accuracy 1 by convention) and ending at accept-all.  Coverage counts
    accepted samples over the combined total; accepted outliers are errors.
    """
    anomalies, _, correct = _sorted_arrays(samples)
    n = len(anomalies)
    _, starts = _group_prefixes(anomalies)
    correct_prefix = np.concatenate(([0], np.cumsum(correct)))
    points: list[CoveragePoint] = []
    for accepted in [*(int(s) for s in starts), n]:
        if accepted == 0:
            points.append(CoveragePoint(0.0, 1.0))
        else:
            points.append(
                CoveragePoint(accepted / n, float(correct_prefix[accepted]) / accepted)
            )
    return points


def coverage_breakpoint(samples: list[ScoredSample], min_accuracy: float) -> float:
    """Largest coverage whose accepted-set accuracy meets min_accuracy; 0 if none."""
    if not 0 <= min_accuracy <= 1:
        raise MetricsError("min_accuracy must lie in [0, 1]")
    best = 0.0
    for p in coverage_curve(samples):
        if p.accuracy >= min_accuracy and p.coverage > best:
            best = p.coverage
    return best


# ---------------------------------------------------------------------------
# full evaluation


@dataclass
class EvaluationReport:
    """All four metrics for one (model, supervisor, OOD set) cell."""

    model_id: str
    epoch: int | None
    test_accuracy: float
    supervisor: str
    config: dict
    ood_set: str
    auroc: float
    fpr_at_95_tpr: float
    cbpl: float
    cov10: float
    n_inliers: int
    n_outliers: int

    def to_json_dict(self) -> dict:
        # reports print 4 decimal places; in-memory values stay full precision
        return {
            "model_id": self.model_id,
            "epoch": self.epoch,
            "test_accuracy": round(self.test_accuracy, 4),
            "supervisor": self.supervisor,
            "config": self.config,
            "ood_set": self.ood_set,
            "auroc": round(self.auroc, 4),
            "fpr_at_95_tpr": round(self.fpr_at_95_tpr, 4),
            "cbpl": round(self.cbpl, 4),
            "cov10": round(self.cov10, 4),
            "n_inliers": self.n_inliers,
            "n_outliers": self.n_outliers,
        }


COV10_TARGET_ACCURACY = 0.90


def scored_samples(
    supervisor, inlier_dump: ActivationDump, outlier_dump: ActivationDump
) -> list[ScoredSample]:
    """Score both dumps and tag inlier correctness from the stored labels.

    Inliers without usable labels count as incorrect, which degrades the
    coverage metrics but leaves the ROC family untouched.
    """
    if inlier_dump.n == 0 or outlier_dump.n == 0:
        raise MetricsError("need both distributions (inliers and outliers)")
    inl_scores = supervisor.scores(inlier_dump)
    out_scores = supervisor.scores(outlier_dump)
    if inlier_dump.labels is None:
        correct = np.zeros(inlier_dump.n, dtype=bool)
    else:
        correct = inlier_dump.predicted == inlier_dump.labels
    samples = [
        ScoredSample(float(a), False, bool(c))
        for a, c in zip(inl_scores, correct)
    ]
    samples += [ScoredSample(float(a), True) for a in out_scores]
    return samples


def evaluate(
    supervisor,
    inlier_dump: ActivationDump,
    outlier_dump: ActivationDump,
    *,
    reference_accuracy: float | None = None,
    model_id: str = "",
    epoch: int | None = None,
    ood_set: str = "",
) -> EvaluationReport:
    """Score every sample and assemble the four-metric report.

    The coverage breakpoint (CBPL) is referenced to the model's inlier test
    accuracy: the recorded checkpoint accuracy when given, otherwise the
    accuracy recomputed from the inlier dump itself.
    """
    samples = scored_samples(supervisor, inlier_dump, outlier_dump)
    if reference_accuracy is None:
        has_labels = (
            inlier_dump.labels is not None and (inlier_dump.labels >= 0).any()
        )
        reference_accuracy = inlier_dump.accuracy() if has_labels else 0.0
    return EvaluationReport(
        model_id=model_id,
        epoch=epoch,
        test_accuracy=reference_accuracy,
        supervisor=supervisor.name,
        config=supervisor.config_dict(),
        ood_set=ood_set,
        auroc=auroc(samples),
        fpr_at_95_tpr=fpr_at_tpr(samples, 0.95),
        cbpl=coverage_breakpoint(samples, reference_accuracy),
        cov10=coverage_breakpoint(samples, COV10_TARGET_ACCURACY),
        n_inliers=inlier_dump.n,
        n_outliers=outlier_dump.n,
    )
