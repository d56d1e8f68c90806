"""Per-point precision/recall evaluation of ground scores.

The threshold sweep visits every distinct score value plus 0 and 1; a point
is predicted ground when its score is >= the threshold (ties included, so
an independent oracle can match bit-for-bit). Precision with zero predicted
positives is defined as 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .cloud import PointCloud
from .errors import DegenerateTruthError, ShapeError


@dataclass
class PRCurve:
    """Threshold-swept confusion summary, sorted by ascending threshold."""

    thresholds: np.ndarray
    precisions: np.ndarray
    recalls: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    positive_count: int
    negative_count: int

    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.precisions.tolist(),
                        self.recalls.tolist()))

    def __len__(self) -> int:
        return len(self.thresholds)


class OperatingPoints(NamedTuple):
    precision_at_recall: float | None
    recall_at_precision: float | None


def range_mask(cloud: PointCloud, max_range: float | None) -> np.ndarray:
    """True for points within ``max_range`` meters horizontally (None = all)."""
    if max_range is None:
        return np.ones(len(cloud), dtype=bool)
    return cloud.horizontal_ranges() <= max_range


def pr_curve(scores: np.ndarray, truth: np.ndarray,
             mask: np.ndarray | None = None) -> PRCurve:
    """Precision/recall over all distinct-score thresholds plus 0 and 1."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    if scores.shape != truth.shape:
        raise ShapeError(f"{scores.shape} scores vs {truth.shape} truth")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != scores.shape:
            raise ShapeError("mask shape does not match scores")
        scores, truth = scores[mask], truth[mask]
    pos = int(truth.sum())
    neg = truth.size - pos
    if pos == 0:
        raise DegenerateTruthError("no positive ground-truth point under the mask")
    thresholds = np.unique(np.concatenate([scores, [0.0, 1.0]]))
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    pos_scores = np.sort(scores[truth])
    # predicted ground at t = score >= t; counts via sorted-array search
    predicted = scores.size - np.searchsorted(sorted_scores, thresholds, side="left")
    tp = pos - np.searchsorted(pos_scores, thresholds, side="left")
    fp = predicted - tp
    with np.errstate(invalid="ignore"):
        precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 1.0)
    recall = tp / pos
    return PRCurve(thresholds, precision, recall, tp, fp, pos, neg)


def pooled_pr_curve(frames) -> PRCurve:
    """Curve over many frames' (scores, truth, mask) triples.

    Pooling the points before the sweep equals summing per-threshold
    confusion counts across frames, so parallel per-frame evaluation can
    merge through this.
    """
    scores, truth, masks = [], [], []
    for s, t, m in frames:
        scores.append(np.asarray(s, dtype=np.float64))
        truth.append(np.asarray(t, dtype=bool))
        masks.append(np.ones(len(scores[-1]), dtype=bool) if m is None
                     else np.asarray(m, dtype=bool))
    return pr_curve(np.concatenate(scores), np.concatenate(truth),
                    np.concatenate(masks))


def average_precision(curve: PRCurve) -> float:
    """Area under the PR curve by the step-wise rule.

    Points are walked in ascending recall from an implicit recall 0; each
    step contributes its recall increment times the precision at the step's
    high-recall end (the highest-threshold point attaining that recall).
    """
    order = np.lexsort((-curve.thresholds, curve.recalls))
    r = curve.recalls[order]
    p = curve.precisions[order]
    steps = np.diff(np.concatenate([[0.0], r]))
    return float((steps * p).sum())


def best_f_score(curve: PRCurve) -> float:
    """Highest harmonic mean of precision and recall on the curve."""
    p, r = curve.precisions, curve.recalls
    denom = p + r
    f = np.where(denom > 0, 2 * p * r / np.maximum(denom, 1e-300), 0.0)
    return float(f.max())


def fixed_operating_points(curve: PRCurve, target_recall: float,
                           target_precision: float) -> OperatingPoints:
    """Precision at a target recall and recall at a target precision.

    Precision is read at the highest-threshold point still reaching the
    target recall; recall is the best over points that actually predict
    something and reach the target precision. Either is None if unattainable.
    """
    at_recall = None
    ok = curve.recalls >= target_recall
    if ok.any():
        at_recall = float(curve.precisions[np.flatnonzero(ok).max()])
    at_precision = None
    ok = (curve.tp + curve.fp > 0) & (curve.precisions >= target_precision)
    if ok.any():
        at_precision = float(curve.recalls[ok].max())
    return OperatingPoints(at_recall, at_precision)


def format_report(metrics: dict) -> str:
    """One ``name<TAB>value`` line per metric, six decimal places."""
    lines = []
    for name, value in metrics.items():
        text = "none" if value is None else f"{value:.6f}"
        lines.append(f"{name}\t{text}")
    return "\n".join(lines) + "\n"


def write_curve_csv(curve: PRCurve, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall"])
        for t, p, r in curve.points():
            writer.writerow([f"{t:.9g}", f"{p:.9g}", f"{r:.9g}"])
