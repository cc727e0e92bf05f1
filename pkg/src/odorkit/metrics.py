"""Evaluation statistics: AUROC, AUPRC, thresholded precision/recall/F1,
correlation coefficients, and bootstrap confidence intervals.

Per-label metrics are averaged unweighted across labels; labels that are
undefined on a given split (single class, no positives) are excluded
from means rather than imputed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


class UndefinedMetricError(ValueError):
    """The metric has no value on this input (e.g. single-class labels)."""


def _check_binary(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be binary 0/1")
    return labels.astype(np.float64)


def _rankdata(x: np.ndarray) -> np.ndarray:
    """Midranks (1-based), ties averaged."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    while i < len(sx):
        j = i
        while j + 1 < len(sx) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auroc(scores, labels) -> float:
    """Probability a random positive outranks a random negative.

    Rank-based (Mann-Whitney) computation; ties count one half. Raises
    UndefinedMetricError when only one class is present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("auroc needs both classes")
    ranks = _rankdata(scores)
    pos_rank_sum = ranks[labels == 1].sum()
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auprc(scores, labels) -> float:
    """Area under precision-recall by stepwise interpolation across the
    distinct score thresholds, descending."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    n_pos = labels.sum()
    if n_pos == 0:
        raise UndefinedMetricError("auprc needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp = np.cumsum(sorted_labels)
    fp = np.cumsum(1.0 - sorted_labels)
    # keep only the last entry of each tied-score block
    keep = np.append(sorted_scores[1:] != sorted_scores[:-1], True)
    tp, fp = tp[keep], fp[keep]
    precision = tp / (tp + fp)
    recall = tp / n_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


def prf1(scores, labels, threshold: float) -> tuple[float, float, float]:
    """(precision, recall, F1) at score >= threshold; empty predictions
    have precision 0 by convention."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    pred = scores >= threshold
    tp = float(np.sum(pred * labels))
    fp = float(np.sum(pred * (1 - labels)))
    fn = float(np.sum((~pred) * labels))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def optimize_threshold(scores, labels) -> float:
    """Threshold maximizing F1 among midpoints of sorted distinct scores
    (plus one candidate below the minimum); ties pick the lower one.
    Degenerate labels fall back to 0.5."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    if labels.sum() == 0 or len(scores) == 0:
        return 0.5
    distinct = np.unique(scores)
    candidates = [distinct[0] - 1.0]
    candidates += list((distinct[:-1] + distinct[1:]) / 2.0)
    best_t, best_f1 = candidates[0], -1.0
    for t in candidates:
        _, _, f1 = prf1(scores, labels, t)
        if f1 > best_f1:
            best_t, best_f1 = t, f1
    return float(best_t)


def optimize_thresholds(cv_scores: np.ndarray, cv_labels: np.ndarray) -> np.ndarray:
    """Per-label F1-optimal thresholds from cross-validation predictions."""
    cv_scores = np.asarray(cv_scores, dtype=np.float64)
    cv_labels = np.asarray(cv_labels)
    return np.array([
        optimize_threshold(cv_scores[:, j], cv_labels[:, j])
        for j in range(cv_scores.shape[1])
    ])


def pearson_r(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need two equal-length vectors, n >= 2")
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float(np.dot(xd, xd)) * float(np.dot(yd, yd)))
    if denom == 0.0:
        raise UndefinedMetricError("pearson r undefined for zero variance")
    return float(np.dot(xd, yd)) / denom


def r_squared(pred, actual) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if len(pred) != len(actual) or len(pred) < 2:
        raise ValueError("need two equal-length vectors, n >= 2")
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedMetricError("r squared undefined for constant actuals")
    ss_res = float(np.sum((actual - pred) ** 2))
    return 1.0 - ss_res / ss_tot


def kendall_tau(x, y) -> float:
    """Kendall tau-b (tie corrected), by merge-sort inversion counting."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need two equal-length vectors, n >= 2")
    n = len(x)
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]

    def tie_pairs(v: np.ndarray) -> float:
        _, counts = np.unique(v, return_counts=True)
        return float((counts * (counts - 1) // 2).sum())

    n0 = n * (n - 1) / 2.0
    n1 = tie_pairs(xs)
    n2 = tie_pairs(ys)
    # joint ties: pairs tied in both x and y
    pair_view = xs + 1j * ys
    n3 = tie_pairs(pair_view)
    denom = math.sqrt((n0 - n1) * (n0 - n2))
    if denom == 0.0:
        raise UndefinedMetricError("kendall tau undefined for constant input")
    swaps = _merge_count(list(ys))
    # concordant - discordant = n0 - n1 - n2 + n3 - 2 * swaps
    return (n0 - n1 - n2 + n3 - 2.0 * swaps) / denom


def _merge_count(y: list) -> int:
    """Number of inversions in y (x is already sorted)."""
    n = len(y)
    work = list(y)
    buf = [0.0] * n
    swaps = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if work[j] < work[i]:
                    swaps += mid - i
                    buf[k] = work[j]
                    j += 1
                else:
                    buf[k] = work[i]
                    i += 1
                k += 1
            buf[k:hi] = work[i:mid] if i < mid else work[j:hi]
            work[lo:hi] = buf[lo:hi]
        width *= 2
    return swaps


def bootstrap_ci(metric, scores, labels, n: int = 1000, seed: int = 0) -> tuple[float, float]:
    """[2.5, 97.5] percentile bounds of a metric over test-set resamples.

    Rows are resampled with replacement n times with per-resample seeds
    derived from (seed, index); resamples where the metric is undefined
    are skipped and counted against the total.
    """
    if n < 1:
        raise ValueError("need at least one resample")
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    rows = len(scores)
    values = []
    for i in range(n):
        rng = np.random.default_rng((seed, i))
        idx = rng.integers(0, rows, size=rows)
        try:
            values.append(metric(scores[idx], labels[idx]))
        except UndefinedMetricError:
            continue
    if not values:
        raise UndefinedMetricError("metric undefined on every resample")
    lo, hi = np.percentile(values, [2.5, 97.5])
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# Multi-label aggregation
# ---------------------------------------------------------------------------

def mean_auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Unweighted mean AUROC across labels, skipping undefined ones."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    values = []
    for j in range(scores.shape[1]):
        try:
            values.append(auroc(scores[:, j], labels[:, j]))
        except UndefinedMetricError:
            continue
    return float(np.mean(values)) if values else float("nan")


@dataclass
class MetricReport:
    """Per-label metric values with unweighted means and bootstrap CIs."""

    labels: list[str]
    per_label: dict = field(default_factory=dict)   # metric -> list (None = undefined)
    means: dict = field(default_factory=dict)       # metric -> float
    intervals: dict = field(default_factory=dict)   # metric -> (lo, hi)
    n_resamples: int = 1000
    seed: int = 0
    skipped: dict = field(default_factory=dict)     # metric -> labels excluded

    def to_json(self) -> str:
        return json.dumps({
            "labels": self.labels,
            "per_label": self.per_label,
            "means": self.means,
            "intervals": {k: list(v) for k, v in self.intervals.items()},
            "n_resamples": self.n_resamples,
            "seed": self.seed,
            "skipped": self.skipped,
        }, indent=2, sort_keys=True)


def evaluate_multilabel(scores: np.ndarray, labels: np.ndarray,
                        label_names: list[str],
                        thresholds: np.ndarray | None = None,
                        n_resamples: int = 1000, seed: int = 0,
                        ci: bool = True) -> MetricReport:
    """Full per-label report: AUROC, AUPRC and thresholded P/R/F1, with
    bootstrap CIs on the mean metrics when ci is set.

    thresholds default to 0.5 per label; pass optimize_thresholds output
    computed on a separate split for tuned decision points.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_labels = scores.shape[1]
    if thresholds is None:
        thresholds = np.full(n_labels, 0.5)
    report = MetricReport(labels=list(label_names), n_resamples=n_resamples, seed=seed)

    per = {m: [] for m in ("auroc", "auprc", "precision", "recall", "f1")}
    skipped = {"auroc": [], "auprc": []}
    for j in range(n_labels):
        try:
            per["auroc"].append(auroc(scores[:, j], labels[:, j]))
        except UndefinedMetricError:
            per["auroc"].append(None)
            skipped["auroc"].append(label_names[j])
        try:
            per["auprc"].append(auprc(scores[:, j], labels[:, j]))
        except UndefinedMetricError:
            per["auprc"].append(None)
            skipped["auprc"].append(label_names[j])
        p, r, f1 = prf1(scores[:, j], labels[:, j], thresholds[j])
        per["precision"].append(p)
        per["recall"].append(r)
        per["f1"].append(f1)
    report.per_label = per
    report.skipped = skipped
    for m, vals in per.items():
        present = [v for v in vals if v is not None]
        report.means[m] = float(np.mean(present)) if present else float("nan")

    if ci:
        def mean_metric(fn):
            def call(s, l):
                vals = []
                for j in range(n_labels):
                    try:
                        vals.append(fn(s[:, j], l[:, j]))
                    except UndefinedMetricError:
                        continue
                if not vals:
                    raise UndefinedMetricError("all labels undefined")
                return float(np.mean(vals))
            return call

        report.intervals["auroc"] = bootstrap_ci(
            mean_metric(auroc), scores, labels, n_resamples, seed)
        report.intervals["auprc"] = bootstrap_ci(
            mean_metric(auprc), scores, labels, n_resamples, seed)

        def mean_f1(s, l):
            return float(np.mean([prf1(s[:, j], l[:, j], thresholds[j])[2]
                                  for j in range(n_labels)]))

        report.intervals["f1"] = bootstrap_ci(mean_f1, scores, labels, n_resamples, seed)
    return report
