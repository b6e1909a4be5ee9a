"""Domain types shared by all modules: images, masks, scalar maps, calibration.

All types are immutable value objects: constructors copy their array inputs
and lock them read-only, so instances are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import singledispatch

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "Space",
    "RgbImage",
    "TomMask",
    "ScalarMap",
    "StereoCalibration",
    "AffineAlignment",
    "InpaintColor",
    "depth_to_disparity",
    "disparity_to_depth",
    "resize_quarter",
]


class Space(str, Enum):
    """Unit tag for a ScalarMap. Operations reject mismatched spaces."""

    DEPTH_MM = "depth_mm"
    DISPARITY_PX = "disparity_px"
    AFFINE_INVERSE_DEPTH = "affine_inverse_depth"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RgbImage:
    """An 8-bit RGB raster, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise DimensionError(f"RGB image must be (H, W, 3), got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise DimensionError("RGB image must be at least 1x1")
        if px.dtype != np.uint8:
            raise DomainError(f"RGB image must be uint8, got {px.dtype}")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class TomMask:
    """Binary per-pixel labels, 1 = transparent-or-mirror surface, 0 = other."""

    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise DimensionError(f"mask must be 2-D, got shape {lab.shape}")
        if lab.shape[0] < 1 or lab.shape[1] < 1:
            raise DimensionError("mask must be at least 1x1")
        if not np.isin(lab, (0, 1)).all():
            raise DomainError("mask values must be 0 or 1")
        object.__setattr__(self, "labels", _freeze(lab.astype(np.uint8)))

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    def as_bool(self) -> np.ndarray:
        return self.labels.astype(bool)


@dataclass(frozen=True)
class ScalarMap:
    """A per-pixel float field with explicit validity and a unit-space tag.

    Validity is a separate boolean plane rather than a sentinel value, so
    0 disparity stays expressible as data. Values at invalid pixels are
    unconstrained (they may be non-finite, e.g. +inf read from a PFM).
    """

    values: np.ndarray
    valid: np.ndarray = None
    space: Space = Space.DISPARITY_PX

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise DimensionError(f"map must be 2-D, got shape {vals.shape}")
        if self.valid is None:
            valid = np.ones(vals.shape, dtype=bool)
        else:
            valid = np.asarray(self.valid, dtype=bool)
        if valid.shape != vals.shape:
            raise DimensionError(
                f"valid plane shape {valid.shape} != values shape {vals.shape}"
            )
        space = Space(self.space)
        checked = vals[valid]
        if not np.isfinite(checked).all():
            raise DomainError("valid pixels must hold finite values")
        if space is Space.DEPTH_MM and checked.size and not (checked > 0).all():
            raise DomainError("valid depth_mm values must be > 0")
        if space is Space.DISPARITY_PX and checked.size and not (checked >= 0).all():
            raise DomainError("valid disparity_px values must be >= 0")
        object.__setattr__(self, "values", _freeze(vals))
        object.__setattr__(self, "valid", _freeze(valid))
        object.__setattr__(self, "space", space)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class StereoCalibration:
    """Rectified stereo rig reduced to what triangulation needs."""

    focal_px: float
    baseline_mm: float

    def __post_init__(self):
        if not (self.focal_px > 0 and np.isfinite(self.focal_px)):
            raise DomainError(f"focal must be > 0, got {self.focal_px}")
        if not (self.baseline_mm > 0 and np.isfinite(self.baseline_mm)):
            raise DomainError(f"baseline must be > 0, got {self.baseline_mm}")


@dataclass(frozen=True)
class AffineAlignment:
    """Scale/shift pair mapping an affine-ambiguous prediction onto a target.

    A degenerate fit may legitimately produce scale 0, so no nonzero
    constraint is imposed; both fields must merely be finite.
    """

    scale: float
    shift: float

    def __post_init__(self):
        if not (np.isfinite(self.scale) and np.isfinite(self.shift)):
            raise DomainError("alignment parameters must be finite")


@dataclass(frozen=True)
class InpaintColor:
    """One 8-bit RGB in-painting color."""

    r: int
    g: int
    b: int

    def __post_init__(self):
        for name, c in (("r", self.r), ("g", self.g), ("b", self.b)):
            if not (isinstance(c, (int, np.integer)) and 0 <= c <= 255):
                raise DomainError(f"channel {name}={c} outside [0, 255]")

    def as_tuple(self) -> tuple[int, int, int]:
        return (int(self.r), int(self.g), int(self.b))


def depth_to_disparity(depth: ScalarMap, calib: StereoCalibration) -> ScalarMap:
    """Triangulate a metric depth map into disparities: d = f * b / Z.

    Invalid pixels pass through untouched (value and validity).
    """
    if depth.space is not Space.DEPTH_MM:
        raise DomainError(f"expected depth_mm input, got {depth.space.value}")
    vals = depth.values
    if np.any(depth.valid & ~(vals > 0)):
        raise DomainError("valid pixel with depth <= 0")
    out = vals.copy()
    out[depth.valid] = calib.focal_px * calib.baseline_mm / vals[depth.valid]
    return ScalarMap(out, depth.valid, Space.DISPARITY_PX)


def disparity_to_depth(disp: ScalarMap, calib: StereoCalibration) -> ScalarMap:
    """Invert triangulation: Z = f * b / d.

    Pixels with zero disparity (points at infinity) become invalid.
    """
    if disp.space is not Space.DISPARITY_PX:
        raise DomainError(f"expected disparity_px input, got {disp.space.value}")
    vals = disp.values
    usable = disp.valid & (vals > 0)
    out = vals.copy()
    out[usable] = calib.focal_px * calib.baseline_mm / vals[usable]
    return ScalarMap(out, usable, Space.DEPTH_MM)


def _check_quarter_dims(width: int, height: int) -> tuple[int, int]:
    if width < 4 or height < 4:
        raise DimensionError(f"dims {width}x{height} too small to quarter")
    return width // 4, height // 4


@singledispatch
def resize_quarter(raster):
    """Downsample a raster to quarter resolution (dims = floor(dims / 4)).

    RGB images use 4x4 block area averaging; masks and scalar maps use
    nearest-neighbor sampling at the block centers. Disparity values are
    additionally scaled by 0.25, the horizontal ratio of the sampling grid.
    Dims not divisible by 4 lose the right/bottom remainder (at most 3 px).
    """
    raise TypeError(f"cannot quarter-resize {type(raster).__name__}")


@resize_quarter.register
def _(image: RgbImage) -> RgbImage:
    out_w, out_h = _check_quarter_dims(image.width, image.height)
    px = image.pixels[: out_h * 4, : out_w * 4].astype(np.float64)
    blocks = px.reshape(out_h, 4, out_w, 4, 3).mean(axis=(1, 3))
    return RgbImage(np.rint(blocks).astype(np.uint8))


@resize_quarter.register
def _(mask: TomMask) -> TomMask:
    out_w, out_h = _check_quarter_dims(mask.width, mask.height)
    return TomMask(mask.labels[2 : out_h * 4 : 4, 2 : out_w * 4 : 4])


@resize_quarter.register
def _(smap: ScalarMap) -> ScalarMap:
    out_w, out_h = _check_quarter_dims(smap.width, smap.height)
    rows = slice(2, out_h * 4, 4)
    cols = slice(2, out_w * 4, 4)
    vals = smap.values[rows, cols].copy()
    valid = smap.valid[rows, cols]
    if smap.space is Space.DISPARITY_PX:
        vals *= 0.25
    return ScalarMap(vals, valid, smap.space)
