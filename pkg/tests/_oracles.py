"""Independent brute-force oracles used to check the fast implementations.

Everything here recomputes metrics from first principles with plain loops:
exhaustive threshold enumeration over midpoints, pairwise score comparisons,
straight-line matrix arithmetic.  Nothing imports the code under test.
"""

from __future__ import annotations

import math


def pairwise_auroc(inlier_scores, outlier_scores) -> float:
    """P(outlier > inlier) with ties credited one half, over all pairs."""
    wins = 0.0
    for o in outlier_scores:
        for i in inlier_scores:
            if o > i:
                wins += 1.0
            elif o == i:
                wins += 0.5
    return wins / (len(inlier_scores) * len(outlier_scores))


def midpoint_thresholds(scores) -> list[float]:
    """All realizable decision boundaries: midpoints between distinct sorted
    values plus one below the minimum and one above the maximum."""
    values = sorted(set(scores))
    thresholds = [values[0] - 1.0]
    for a, b in zip(values, values[1:]):
        thresholds.append((a + b) / 2.0)
    thresholds.append(values[-1] + 1.0)
    return thresholds


def counts_at(samples, threshold):
    """(tp, fp, tn, fn) under accept iff anomaly < threshold.

    samples: list of (anomaly, is_outlier, inlier_correct) triples.
    """
    tp = fp = tn = fn = 0
    for anomaly, is_outlier, _ in samples:
        accepted = anomaly < threshold
        if is_outlier:
            if accepted:
                fn += 1
            else:
                tp += 1
        else:
            if accepted:
                tn += 1
            else:
                fp += 1
    return tp, fp, tn, fn


def sweep_fpr_at_tpr(samples, level) -> float:
    """Minimum FPR over all midpoint thresholds with TPR >= level."""
    best = None
    for t in midpoint_thresholds([s[0] for s in samples]):
        tp, fp, tn, fn = counts_at(samples, t)
        tpr = tp / (tp + fn)
        fpr = fp / (fp + tn)
        if tpr >= level and (best is None or fpr < best):
            best = fpr
    assert best is not None
    return best


def sweep_coverage_points(samples) -> list[tuple[float, float]]:
    """(coverage, accuracy) at every midpoint threshold, de-duplicated and
    sorted by coverage.  The empty accepted set has accuracy 1."""
    n = len(samples)
    points = set()
    for t in midpoint_thresholds([s[0] for s in samples]):
        accepted = [s for s in samples if s[0] < t]
        if not accepted:
            points.add((0.0, 1.0))
            continue
        good = sum(1 for a, is_outlier, correct in accepted if not is_outlier and correct)
        points.add((len(accepted) / n, good / len(accepted)))
    return sorted(points)


def sweep_coverage_breakpoint(samples, min_accuracy) -> float:
    best = 0.0
    for cov, acc in sweep_coverage_points(samples):
        if acc >= min_accuracy and cov > best:
            best = cov
    return best


def straight_line_mlp(weights_biases, x):
    """Evaluate a dense/relu stack with plain Python loops.

    weights_biases: list of (W, b) with W as nested lists [in][out];
    relu between consecutive layers, none after the last.
    """
    h = list(x)
    for layer_index, (w, b) in enumerate(weights_biases):
        out = []
        for j in range(len(b)):
            acc = b[j]
            for i in range(len(h)):
                acc += h[i] * w[i][j]
            out.append(acc)
        if layer_index < len(weights_biases) - 1:
            out = [v if v > 0 else 0.0 for v in out]
        h = out
    return h


def plain_softmax(values, temperature=1.0):
    z = [v / temperature for v in values]
    m = max(z)
    e = [math.exp(v - m) for v in z]
    s = sum(e)
    return [v / s for v in e]
