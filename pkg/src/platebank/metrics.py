"""KPIs, paired-sample statistics, ROC analysis and KPI-surface lookup.

Wastage counts every received unit lost to in-stock expiry, slippage or
post-issue expiry, over all units received from routine and emergency
orders.  Service level is the fraction of demand met from stock.  Daily cost
is the negative mean daily reward.
"""

from __future__ import annotations

import csv
import math
import warnings
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .core import CostParams, InputError, RolloutResult


def _mean_std(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1))


def rollout_metrics(res: RolloutResult) -> tuple[float, float, float]:
    """(daily cost, service level, wastage) of one rollout, with the
    degenerate conventions: no demand -> service 1, no receipts -> wastage 0."""
    cost = -res.reward_sum / res.days_counted if res.days_counted else 0.0
    service = (res.demand - res.emergency_units) / res.demand if res.demand else 1.0
    received = res.received_routine + res.received_emergency
    wasted = (res.wasted_expiry_in_stock + res.wasted_slippage
              + res.wasted_expired_after_issue)
    wastage = wasted / received if received else 0.0
    return cost, service, wastage


@dataclass(frozen=True)
class KPIReport:
    daily_cost_mean: float
    daily_cost_std: float
    service_mean: float
    service_std: float
    wastage_mean: float
    wastage_std: float
    n_rollouts: int


def compute_kpis(results: list[RolloutResult], costs: CostParams | None = None) -> KPIReport:
    """Mean and standard deviation of the KPIs over rollouts.  The cost
    parameters are already baked into each rollout's reward, so `costs` is
    accepted only for interface symmetry."""
    if not results:
        raise InputError("compute_kpis needs at least one rollout")
    cost, service, wastage = zip(*(rollout_metrics(r) for r in results))
    cm, cs = _mean_std(cost)
    sm, ss = _mean_std(service)
    wm, ws = _mean_std(wastage)
    return KPIReport(cm, cs, sm, ss, wm, ws, len(results))


@dataclass(frozen=True)
class PairedComparison:
    """Per-metric mean of per-rollout differences (a - b) with the standard
    error of that mean; valid only for equal-length same-seed result lists."""

    daily_cost_diff: float
    daily_cost_sem: float
    service_diff: float
    service_sem: float
    wastage_diff: float
    wastage_sem: float
    n_rollouts: int
    degenerate_n: bool = False


def paired_difference(results_a: list[RolloutResult], results_b: list[RolloutResult],
                      costs: CostParams | None = None) -> PairedComparison:
    if len(results_a) != len(results_b):
        raise InputError("paired comparison needs equal-length result lists")
    if not results_a:
        raise InputError("paired comparison needs at least one rollout pair")
    n = len(results_a)
    degenerate = n == 1
    if degenerate:
        warnings.warn("paired comparison over a single rollout: SEM reported as 0")

    def diff_stats(idx):
        diffs = [rollout_metrics(a)[idx] - rollout_metrics(b)[idx]
                 for a, b in zip(results_a, results_b)]
        mean, std = _mean_std(diffs)
        return mean, std / math.sqrt(n) if n > 1 else 0.0

    cd, cse = diff_stats(0)
    sd, sse = diff_stats(1)
    wd, wse = diff_stats(2)
    return PairedComparison(cd, cse, sd, sse, wd, wse, n, degenerate)


# --- ROC ----------------------------------------------------------------------


@dataclass(frozen=True)
class RocCurve:
    """Points (threshold, TPR, FPR) sorted by threshold descending, from the
    all-negative endpoint (0, 0) to the all-positive endpoint (1, 1).  A score
    counts as positive when score >= threshold."""

    points: tuple[tuple[float, float, float], ...]
    auroc: float
    partial_auroc: float  # raw trapezoidal area over FPR in [0, 0.6]

    PARTIAL_FPR_LIMIT = 0.6


def _trapezoid(xs, ys) -> float:
    area = 0.0
    for i in range(1, len(xs)):
        area += (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]) / 2.0
    return area


def roc_analysis(scores, labels) -> RocCurve:
    """ROC curve with one threshold per distinct score, AUROC by the
    trapezoidal rule, and the raw partial area restricted to FPR <= 0.6
    (boundary point linearly interpolated)."""
    scores = [float(s) for s in scores]
    labels = [int(v) for v in labels]
    if len(scores) != len(labels):
        raise InputError("scores and labels must have equal length")
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("ROC analysis needs both classes present")

    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    points = [(math.inf, 0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(order):
        threshold = scores[order[i]]
        while i < len(order) and scores[order[i]] == threshold:
            if labels[order[i]]:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((threshold, tp / n_pos, fp / n_neg))

    fprs = [p[2] for p in points]
    tprs = [p[1] for p in points]
    auroc = _trapezoid(fprs, tprs)

    limit = RocCurve.PARTIAL_FPR_LIMIT
    cut_x = [fprs[0]]
    cut_y = [tprs[0]]
    for j in range(1, len(fprs)):
        if fprs[j] <= limit:
            cut_x.append(fprs[j])
            cut_y.append(tprs[j])
        else:
            if fprs[j - 1] < limit:
                frac = (limit - fprs[j - 1]) / (fprs[j] - fprs[j - 1])
                cut_x.append(limit)
                cut_y.append(tprs[j - 1] + frac * (tprs[j] - tprs[j - 1]))
            break
    partial = _trapezoid(cut_x, cut_y)
    return RocCurve(tuple(points), auroc, partial)


def pair_count_auroc(scores, labels) -> float:
    """Independent AUROC estimator: fraction of positive-negative pairs
    ranked correctly, ties counted half.  Used as the oracle for the
    trapezoidal implementation."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    if not pos or not neg:
        raise InputError("ROC analysis needs both classes present")
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


# --- KPI surface ----------------------------------------------------------------


DEFAULT_AXIS = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass(frozen=True)
class MetricGrid:
    """A KPI surface over (sensitivity, specificity); values[i][j] is the KPI
    at sensitivity_axis[i], specificity_axis[j]."""

    sensitivity_axis: tuple[float, ...]
    specificity_axis: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    def validate(self) -> "MetricGrid":
        if len(self.values) != len(self.sensitivity_axis):
            raise InputError("grid row count != sensitivity axis length")
        for row in self.values:
            if len(row) != len(self.specificity_axis):
                raise InputError("grid column count != specificity axis length")
        for axis in (self.sensitivity_axis, self.specificity_axis):
            if len(axis) < 1 or any(b <= a for a, b in zip(axis, axis[1:])):
                raise InputError("grid axes must be strictly increasing and non-empty")
        return self


def _cell(axis: tuple[float, ...], x: float) -> tuple[int, float]:
    """Index of the cell containing x and the fractional position inside it."""
    hi = bisect_left(axis, x)
    if hi == 0:
        return 0, 0.0
    if hi >= len(axis):
        hi = len(axis) - 1
    lo = hi - 1
    span = axis[hi] - axis[lo]
    return lo, (x - axis[lo]) / span


def interpolate_grid(grid: MetricGrid, sensitivity: float, specificity: float) -> float:
    """Bilinear interpolation on the enclosing cell; exact at grid nodes."""
    if not 0.0 <= sensitivity <= 1.0 or not 0.0 <= specificity <= 1.0:
        raise InputError("interpolation query outside [0, 1] x [0, 1]")
    grid.validate()
    if len(grid.sensitivity_axis) < 2 or len(grid.specificity_axis) < 2:
        raise InputError("interpolation needs at least 2 nodes per axis")
    if not grid.sensitivity_axis[0] <= sensitivity <= grid.sensitivity_axis[-1]:
        raise InputError("sensitivity query outside grid axis range")
    if not grid.specificity_axis[0] <= specificity <= grid.specificity_axis[-1]:
        raise InputError("specificity query outside grid axis range")
    i, fi = _cell(grid.sensitivity_axis, sensitivity)
    j, fj = _cell(grid.specificity_axis, specificity)
    v00 = grid.values[i][j]
    v01 = grid.values[i][j + 1] if fj > 0 else v00
    v10 = grid.values[i + 1][j] if fi > 0 else v00
    v11 = grid.values[i + 1][j + 1] if fi > 0 and fj > 0 else (v01 if fi == 0 else v10)
    top = v00 * (1 - fj) + v01 * fj
    bottom = v10 * (1 - fj) + v11 * fj
    return top * (1 - fi) + bottom * fi


def select_threshold(curve: RocCurve, wastage_grid: MetricGrid):
    """Pick the ROC threshold minimizing the interpolated wastage at
    (sensitivity, specificity = 1 - FPR); ties go to higher sensitivity.

    Returns (threshold, sensitivity, specificity, predicted wastage)."""
    if not curve.points:
        raise InputError("empty ROC curve")
    best = None
    for threshold, tpr, fpr in curve.points:
        est = interpolate_grid(wastage_grid, tpr, 1.0 - fpr)
        if best is None or est < best[3] or (est == best[3] and tpr > best[1]):
            best = (threshold, tpr, 1.0 - fpr, est)
    return best


# --- CSV formats ---------------------------------------------------------------


def write_grid_csv(grid: MetricGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sensitivity"] + [repr(v) for v in grid.specificity_axis])
        for sens, row in zip(grid.sensitivity_axis, grid.values):
            writer.writerow([repr(sens)] + [repr(v) for v in row])


def read_grid_csv(path) -> MetricGrid:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InputError(f"grid file {path}: need a header and at least 1 data row")
    try:
        spec_axis = tuple(float(v) for v in rows[0][1:])
        sens_axis = tuple(float(r[0]) for r in rows[1:])
        values = tuple(tuple(float(v) for v in r[1:]) for r in rows[1:])
    except (ValueError, IndexError) as exc:
        raise InputError(f"grid file {path}: malformed CSV ({exc})") from exc
    return MetricGrid(sens_axis, spec_axis, values).validate()


def read_roc_csv(path) -> tuple[list[float], list[int]]:
    """Score/label pairs from a CSV with header `score,label`."""
    scores: list[float] = []
    labels: list[int] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or {"score", "label"} - set(reader.fieldnames):
            raise InputError(f"ROC file {path}: header must include score,label")
        for line, row in enumerate(reader, start=2):
            try:
                scores.append(float(row["score"]))
                label = int(row["label"])
            except (TypeError, ValueError) as exc:
                raise InputError(f"ROC file {path} line {line}: {exc}") from exc
            if label not in (0, 1):
                raise InputError(f"ROC file {path} line {line}: label must be 0 or 1")
            labels.append(label)
    if not scores:
        raise InputError(f"ROC file {path}: no data rows")
    return scores, labels


def write_roc_csv(scores, labels, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["score", "label"])
        for s, y in zip(scores, labels):
            writer.writerow([repr(float(s)), int(y)])
