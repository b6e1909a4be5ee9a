"""Seeded color palettes, constant-color in-painting, and mask warping.

The palette generator must be deterministic across platforms, runs, and
thread schedules, so colors are drawn from a SHA-256 keyed byte stream
rather than a process RNG: block ``k`` of the stream is
``sha256(f"{seed}\\x1f{sample_id}\\x1f{k}")`` and each color consumes three
consecutive stream bytes (one per channel, uniform over [0, 255]).

No rejection of colors that happen to match the background is performed;
aggregating over several colors is the mechanism that copes with
ineffective single colors.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from .core import InpaintColor, RgbImage, ScalarMap, Space, TomMask
from .errors import DimensionError, DomainError

__all__ = ["ColorPalette", "sample_palette", "inpaint", "warp_mask_left_to_right"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ColorPalette:
    """An ordered set of in-painting colors, a pure function of its key."""

    colors: tuple[InpaintColor, ...]
    seed: int
    sample_id: str

    def __post_init__(self):
        if len(self.colors) < 1:
            raise DomainError("palette must contain at least one color")
        object.__setattr__(self, "colors", tuple(self.colors))

    def __len__(self) -> int:
        return len(self.colors)


def _keyed_stream(seed: int, sample_id: str, nbytes: int) -> bytes:
    out = bytearray()
    block = 0
    while len(out) < nbytes:
        key = f"{seed}\x1f{sample_id}\x1f{block}".encode("utf-8")
        out.extend(hashlib.sha256(key).digest())
        block += 1
    return bytes(out[:nbytes])


def sample_palette(seed: int, sample_id: str, n: int) -> ColorPalette:
    """Draw n uniform RGB colors, deterministically keyed by (seed, sample_id)."""
    if n < 1:
        raise DomainError(f"palette size must be >= 1, got {n}")
    stream = _keyed_stream(seed, sample_id, 3 * n)
    colors = tuple(
        InpaintColor(stream[3 * i], stream[3 * i + 1], stream[3 * i + 2]) for i in range(n)
    )
    return ColorPalette(colors=colors, seed=seed, sample_id=sample_id)


def inpaint(image: RgbImage, mask: TomMask, color: InpaintColor) -> RgbImage:
    """Replace masked pixels with a constant color; others stay byte-identical."""
    if (image.height, image.width) != (mask.height, mask.width):
        raise DimensionError(
            f"image {image.width}x{image.height} vs mask {mask.width}x{mask.height}"
        )
    out = image.pixels.copy()
    out[mask.as_bool()] = color.as_tuple()
    return RgbImage(out)


def warp_mask_left_to_right(mask: TomMask, gt_disp: ScalarMap) -> TomMask:
    """Warp a left-view mask onto the right view using ground-truth disparity.

    Each left pixel (x, y) with mask 1 and valid disparity d lands on right
    column round(x - d) (nearest integer, ties toward +inf); out-of-bounds
    targets are skipped and colliding targets OR together. Masked pixels
    whose disparity is invalid are dropped with a counted warning.
    """
    if (mask.height, mask.width) != (gt_disp.height, gt_disp.width):
        raise DimensionError(
            f"mask {mask.width}x{mask.height} vs disparity {gt_disp.width}x{gt_disp.height}"
        )
    if gt_disp.space is not Space.DISPARITY_PX:
        raise DomainError(f"warp needs disparity_px, got {gt_disp.space.value}")
    src = mask.as_bool()
    dropped = int(np.count_nonzero(src & ~gt_disp.valid))
    if dropped:
        logger.warning("warp: dropped %d masked pixels with invalid disparity", dropped)
    usable = src & gt_disp.valid
    ys, xs = np.nonzero(usable)
    targets = np.floor(xs - gt_disp.values[ys, xs] + 0.5).astype(np.int64)
    in_bounds = (targets >= 0) & (targets < mask.width)
    out = np.zeros_like(mask.labels)
    out[ys[in_bounds], targets[in_bounds]] = 1
    return TomMask(out)
