"""Evaluation protocol: threshold accuracies, error metrics, splits.

Depth maps are scored with delta-threshold accuracies, MAE, Abs Rel, and
RMSE; disparity maps with bad-tau percentages, MAE, and RMSE. Results are
reported on all valid pixels (All) and on the ToM / Other subsets given by
a segmentation mask. Affine-ambiguous predictions can be rescaled onto the
ground truth by a least-squares fit over all valid pixels before scoring.

Conventions: delta counts a pixel as accurate when max(pred/gt, gt/pred)
is strictly below the threshold; bad-tau counts a pixel as bad when
|pred - gt| is strictly above tau. Ties are accurate / not bad.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ScalarMap, Space
from .distill import apply_affine, fit_affine_lse
from .errors import DomainError, EmptySplit

__all__ = [
    "DELTA_THRESHOLDS",
    "BAD_THRESHOLDS_PX",
    "MetricReport",
    "eval_rescale",
    "delta_accuracy",
    "error_metrics",
    "bad_tau",
    "evaluate_sample",
    "aggregate_reports",
]

DELTA_THRESHOLDS = (1.05, 1.10, 1.15, 1.20, 1.25)
BAD_THRESHOLDS_PX = (2.0, 4.0, 6.0, 8.0)

SPLIT_ALL = "All"
SPLIT_TOM = "ToM"
SPLIT_OTHER = "Other"


@dataclass(frozen=True)
class MetricReport:
    """Metrics for one split of one sample (or an aggregate of samples).

    Fields are None when the family does not apply to the evaluated space
    (delta/abs_rel are depth-only, bad is disparity-only) or when the split
    is empty (count == 0).
    """

    split: str
    count: int
    delta: dict[float, float] | None = None  # threshold -> % accurate
    mae: float | None = None
    abs_rel: float | None = None
    rmse: float | None = None
    bad: dict[float, float] | None = None  # tau (px) -> % bad

    @property
    def empty(self) -> bool:
        return self.count == 0


def eval_rescale(pred: ScalarMap, gt: ScalarMap) -> ScalarMap:
    """LSE-rescale a prediction onto the ground truth over all valid pixels.

    Unlike the fit used for label merging, which excludes ToM pixels, the
    evaluation fit uses every pixel valid in both maps.
    """
    fit = fit_affine_lse(pred, gt, np.ones(pred.values.shape, dtype=bool))
    return apply_affine(pred, fit, space=gt.space)


def _evaluated(pred: ScalarMap, gt: ScalarMap, split_mask: np.ndarray) -> np.ndarray:
    split_mask = np.asarray(split_mask, dtype=bool)
    if split_mask.shape != pred.values.shape or pred.values.shape != gt.values.shape:
        raise DomainError("pred, gt, and split mask dims must agree")
    sel = pred.valid & gt.valid & split_mask
    if not sel.any():
        raise EmptySplit("no evaluated pixels in this split")
    return sel


def delta_accuracy(
    pred: ScalarMap, gt: ScalarMap, split_mask: np.ndarray, threshold: float
) -> float:
    """Percentage of pixels with max(pred/gt, gt/pred) < threshold."""
    sel = _evaluated(pred, gt, split_mask)
    p = pred.values[sel]
    g = gt.values[sel]
    if not ((p > 0).all() and (g > 0).all()):
        raise DomainError("delta accuracy needs strictly positive pred and gt")
    ratio = np.maximum(p / g, g / p)
    return 100.0 * np.count_nonzero(ratio < threshold) / sel.sum()


def error_metrics(
    pred: ScalarMap, gt: ScalarMap, split_mask: np.ndarray
) -> tuple[float, float, float]:
    """(MAE, Abs Rel, RMSE) over the evaluated pixels.

    Abs Rel divides by the ground truth, so gt must be strictly positive
    on the split; it is returned as nan when any gt pixel is not.
    """
    sel = _evaluated(pred, gt, split_mask)
    err = pred.values[sel] - gt.values[sel]
    mae = float(np.abs(err).mean())
    rmse = float(np.sqrt((err**2).mean()))
    g = gt.values[sel]
    abs_rel = float((np.abs(err) / g).mean()) if (g > 0).all() else float("nan")
    return mae, abs_rel, rmse


def bad_tau(pred: ScalarMap, gt: ScalarMap, split_mask: np.ndarray, tau: float) -> float:
    """Percentage of pixels with |pred - gt| > tau (disparity, px)."""
    if pred.space is not Space.DISPARITY_PX or gt.space is not Space.DISPARITY_PX:
        raise DomainError("bad-tau is defined on disparity_px maps")
    sel = _evaluated(pred, gt, split_mask)
    err = np.abs(pred.values[sel] - gt.values[sel])
    return 100.0 * np.count_nonzero(err > tau) / sel.sum()


def _split_report(pred: ScalarMap, gt: ScalarMap, split: str, split_mask: np.ndarray) -> MetricReport:
    try:
        sel = _evaluated(pred, gt, split_mask)
    except EmptySplit:
        return MetricReport(split=split, count=0)
    mae, abs_rel, rmse = error_metrics(pred, gt, split_mask)
    if gt.space is Space.DEPTH_MM:
        delta = {t: delta_accuracy(pred, gt, split_mask, t) for t in DELTA_THRESHOLDS}
        return MetricReport(split, int(sel.sum()), delta=delta, mae=mae, abs_rel=abs_rel, rmse=rmse)
    bad = {t: bad_tau(pred, gt, split_mask, t) for t in BAD_THRESHOLDS_PX}
    return MetricReport(split, int(sel.sum()), mae=mae, rmse=rmse, bad=bad)


def evaluate_sample(
    pred: ScalarMap,
    gt: ScalarMap,
    tom_mask=None,
    rescale: str = "none",
    space: Space | None = None,
) -> list[MetricReport]:
    """Score one prediction against ground truth on the All/ToM/Other splits.

    rescale="lse" first fits pred onto gt over all valid pixels (the
    evaluation convention for affine-ambiguous predictions). An empty split
    yields a count-0 report instead of aborting the others. Without a mask,
    the ToM and Other splits are empty.

    `space` optionally cross-checks the ground-truth space against the
    caller's expectation.
    """
    if space is not None and gt.space is not Space(space):
        raise DomainError(f"expected {Space(space).value} ground truth, got {gt.space.value}")
    if rescale not in ("none", "lse"):
        raise DomainError(f"unknown rescale mode {rescale!r}")
    if rescale == "lse":
        pred = eval_rescale(pred, gt)
    elif pred.space is not gt.space:
        raise DomainError(
            f"pred space {pred.space.value} != gt space {gt.space.value} (no rescale requested)"
        )
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise DomainError("pred and gt dims differ")

    everywhere = np.ones(gt.values.shape, dtype=bool)
    if tom_mask is None:
        tom = np.zeros(gt.values.shape, dtype=bool)
        other = np.zeros(gt.values.shape, dtype=bool)
    else:
        tom = tom_mask.as_bool()
        other = ~tom
    return [
        _split_report(pred, gt, SPLIT_ALL, everywhere),
        _split_report(pred, gt, SPLIT_TOM, tom),
        _split_report(pred, gt, SPLIT_OTHER, other),
    ]


def aggregate_reports(reports: list[MetricReport], weighted: bool = True) -> MetricReport:
    """Combine per-sample reports for one split into a dataset-level report.

    weighted=True (default) averages each metric weighted by the evaluated
    pixel count, equivalent to pooling all pixels for linear metrics;
    weighted=False averages per-image values uniformly. Empty reports are
    skipped. RMSE aggregates in the mean-squared domain so the weighted
    aggregate matches the pooled-pixel value.
    """
    live = [r for r in reports if not r.empty]
    if not live:
        return MetricReport(split=reports[0].split if reports else SPLIT_ALL, count=0)
    split = live[0].split
    if any(r.split != split for r in live):
        raise DomainError("cannot aggregate reports from different splits")
    weights = np.array([r.count if weighted else 1.0 for r in live], dtype=np.float64)
    weights /= weights.sum()

    def avg(pick) -> float | None:
        vals = [pick(r) for r in live]
        if any(v is None for v in vals):
            return None
        return float(np.dot(weights, np.array(vals, dtype=np.float64)))

    mse = avg(lambda r: None if r.rmse is None else r.rmse**2)
    delta = None
    if all(r.delta is not None for r in live):
        delta = {t: avg(lambda r, t=t: r.delta[t]) for t in live[0].delta}
    bad = None
    if all(r.bad is not None for r in live):
        bad = {t: avg(lambda r, t=t: r.bad[t]) for t in live[0].bad}
    return MetricReport(
        split=split,
        count=int(sum(r.count for r in live)),
        delta=delta,
        mae=avg(lambda r: r.mae),
        abs_rel=avg(lambda r: r.abs_rel),
        rmse=None if mse is None else float(np.sqrt(mse)),
        bad=bad,
    )
