"""Label factories: multi-color median aggregation, affine least-squares
alignment, and mono/stereo merging.

Three labeling strategies are supported:

- mono_virtual_depth: in-paint ToM regions with N palette colors, run the
  mono backend on each augmented image, take the per-pixel median.
- stereo_merged: keep the stereo backend's disparities on non-ToM pixels
  and fill ToM pixels with the mono virtual prediction, affinely aligned
  onto the stereo map by a least-squares fit over non-ToM pixels.
- stereo_virtual_disparity: in-paint both views (the right mask obtained
  by warping the left mask with ground-truth disparity) and median the
  stereo predictions over the N colors.

The alignment fit runs directly between the mono backend's affine-ambiguous
output and the stereo disparity map; no numeric triangulation happens first
because the affine fit subsumes any global triangulation constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .backend import BackendSpec, base_key, infer_mono, infer_stereo, mono_key
from .core import AffineAlignment, RgbImage, ScalarMap, Space, TomMask
from .errors import (
    AggregationError,
    BackendError,
    DegenerateFit,
    DimensionError,
    InsufficientSupport,
)
from .inpaint import ColorPalette, inpaint, sample_palette, warp_mask_left_to_right

__all__ = [
    "Strategy",
    "DistillConfig",
    "median_aggregate",
    "fit_affine_lse",
    "apply_affine",
    "distill_mono",
    "distill_stereo_merged",
    "merge_with_alignment",
    "distill_stereo_virtual_disparity",
]


class Strategy(str, Enum):
    MONO_VIRTUAL_DEPTH = "mono_virtual_depth"
    STEREO_VIRTUAL_DISPARITY = "stereo_virtual_disparity"
    STEREO_MERGED = "stereo_merged"


@dataclass(frozen=True)
class DistillConfig:
    """How labels are distilled: palette size, root seed, strategy."""

    num_colors: int = 5
    seed: int = 0
    strategy: Strategy = Strategy.MONO_VIRTUAL_DEPTH

    def __post_init__(self):
        if self.num_colors < 1:
            raise AggregationError(f"num_colors must be >= 1, got {self.num_colors}")
        object.__setattr__(self, "strategy", Strategy(self.strategy))


def median_aggregate(stack: list[ScalarMap]) -> ScalarMap:
    """Per-pixel median over a stack of maps with identical dims and space.

    A pixel's median is taken over the maps where it is valid; the output
    pixel is valid iff it is valid in at least ceil(N/2) maps. An even
    number of contributing values yields the mean of the two middle ones.
    """
    if not stack:
        raise AggregationError("cannot aggregate an empty stack")
    first = stack[0]
    for m in stack[1:]:
        if (m.height, m.width) != (first.height, first.width):
            raise AggregationError(
                f"dim mismatch in stack: {m.width}x{m.height} vs {first.width}x{first.height}"
            )
        if m.space is not first.space:
            raise AggregationError(
                f"space mismatch in stack: {m.space.value} vs {first.space.value}"
            )
    vals = np.stack([m.values for m in stack])
    valid = np.stack([m.valid for m in stack])
    count = valid.sum(axis=0)
    quorum = math.ceil(len(stack) / 2)
    out_valid = count >= quorum

    # push invalid entries to the end, then index the middle of each column
    arr = np.where(valid, vals, np.inf)
    arr.sort(axis=0)
    lo = np.maximum((count - 1) // 2, 0)
    hi = count // 2
    lower = np.take_along_axis(arr, lo[None], axis=0)[0]
    upper = np.take_along_axis(arr, hi[None], axis=0)[0]
    med = 0.5 * (lower + upper)
    return ScalarMap(np.where(out_valid, med, 0.0), out_valid, first.space)


def fit_affine_lse(pred: ScalarMap, target: ScalarMap, fit_mask: np.ndarray) -> AffineAlignment:
    """Closed-form least-squares scale/shift mapping pred onto target.

    Minimizes sum((scale * pred + shift - target)^2) over the pixels
    selected by fit_mask that are valid in both maps, solving the 2x2
    normal equations in double precision via the centered formulation
    (scale = cov / var) for conditioning.
    """
    fit_mask = np.asarray(fit_mask, dtype=bool)
    if fit_mask.shape != pred.values.shape:
        raise DimensionError(
            f"fit mask shape {fit_mask.shape} != map shape {pred.values.shape}"
        )
    if (pred.height, pred.width) != (target.height, target.width):
        raise DimensionError("pred and target dims differ")
    sel = fit_mask & pred.valid & target.valid
    n = int(np.count_nonzero(sel))
    if n < 2:
        raise InsufficientSupport(f"{n} usable pixels selected, need >= 2")
    p = pred.values[sel]
    t = target.values[sel]
    if np.ptp(p) == 0.0:
        raise DegenerateFit("prediction is constant over the fit support")
    pm = p.mean()
    tm = t.mean()
    pc = p - pm
    var = float(pc @ pc)
    cov = float(pc @ (t - tm))
    scale = cov / var
    return AffineAlignment(scale=scale, shift=float(tm - scale * pm))


def apply_affine(smap: ScalarMap, a: AffineAlignment, space: Space | None = None) -> ScalarMap:
    """Apply value -> scale * value + shift on valid pixels.

    Validity is unchanged; `space` retags the output (defaults to the
    input's space).
    """
    out = smap.values.copy()
    out[smap.valid] = a.scale * out[smap.valid] + a.shift
    return ScalarMap(out, smap.valid, space if space is not None else smap.space)


def distill_mono(
    image: RgbImage,
    mask: TomMask,
    backend: BackendSpec,
    cfg: DistillConfig,
    sample_id: str,
) -> ScalarMap:
    """Produce the virtual-depth label for one image.

    Samples the palette for (cfg.seed, sample_id, cfg.num_colors), in-paints
    the masked regions with each color, infers a map per augmented image,
    and returns the per-pixel median aggregate.
    """
    palette = sample_palette(cfg.seed, sample_id, cfg.num_colors)
    maps = []
    for i, color in enumerate(palette.colors):
        augmented = inpaint(image, mask, color)
        try:
            maps.append(infer_mono(backend, augmented, mono_key(sample_id, i)))
        except BackendError as e:
            raise BackendError(e.key, f"color index {i}: {e}") from e
    try:
        return median_aggregate(maps)
    except AggregationError as e:
        raise AggregationError(f"aggregating {len(maps)} color maps: {e}") from e


def merge_with_alignment(
    left: RgbImage,
    right: RgbImage,
    mask: TomMask,
    mono_backend: BackendSpec,
    stereo_backend: BackendSpec,
    cfg: DistillConfig,
    sample_id: str,
) -> tuple[ScalarMap, AffineAlignment]:
    """Merged-label distillation, also returning the fitted alignment.

    The base disparity comes from the stereo backend on the untouched pair;
    the mono virtual prediction comes from distill_mono on the left image.
    The scale/shift pair is fitted over non-ToM pixels only, then the label
    takes the base disparity where mask=0 (bit-exact) and the aligned mono
    value where mask=1. Aligned values that fall below zero cannot be
    disparities and are marked invalid.
    """
    base = infer_stereo(stereo_backend, left, right, base_key(sample_id))
    if (base.height, base.width) != (mask.height, mask.width):
        raise DimensionError("stereo output dims differ from mask dims")
    mono = distill_mono(left, mask, mono_backend, cfg, sample_id)
    tom = mask.as_bool()
    alignment = fit_affine_lse(mono, base, ~tom)

    values = base.values.copy()
    valid = base.valid.copy()
    aligned = alignment.scale * mono.values + alignment.shift
    fill = tom & mono.valid & (aligned >= 0)
    values[fill] = aligned[fill]
    values[tom & ~fill] = 0.0
    valid[tom] = fill[tom]
    return ScalarMap(values, valid, Space.DISPARITY_PX), alignment


def distill_stereo_merged(
    left: RgbImage,
    right: RgbImage,
    mask: TomMask,
    mono_backend: BackendSpec,
    stereo_backend: BackendSpec,
    cfg: DistillConfig,
    sample_id: str,
) -> ScalarMap:
    """Merged-label distillation (see merge_with_alignment)."""
    merged, _ = merge_with_alignment(
        left, right, mask, mono_backend, stereo_backend, cfg, sample_id
    )
    return merged


def distill_stereo_virtual_disparity(
    left: RgbImage,
    right: RgbImage,
    mask: TomMask,
    gt_disp: ScalarMap,
    stereo_backend: BackendSpec,
    cfg: DistillConfig,
    sample_id: str,
) -> ScalarMap:
    """Virtual-disparity distillation: in-paint both views, median over colors.

    The right-view mask is obtained by warping the left mask with
    ground-truth disparity; each palette color is painted into both views
    before the stereo backend runs.
    """
    right_mask = warp_mask_left_to_right(mask, gt_disp)
    palette = sample_palette(cfg.seed, sample_id, cfg.num_colors)
    maps = []
    for i, color in enumerate(palette.colors):
        aug_left = inpaint(left, mask, color)
        aug_right = inpaint(right, right_mask, color)
        try:
            maps.append(infer_stereo(stereo_backend, aug_left, aug_right, mono_key(sample_id, i)))
        except BackendError as e:
            raise BackendError(e.key, f"color index {i}: {e}") from e
    return median_aggregate(maps)


def palette_for(cfg: DistillConfig, sample_id: str) -> ColorPalette:
    """The palette a distillation run will use for this sample."""
    return sample_palette(cfg.seed, sample_id, cfg.num_colors)
