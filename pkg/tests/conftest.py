"""Shared synthetic fixtures: planar stereo scenes with rectangular ToM
masks, file backends, and manifests, built so that every pipeline value is
exactly representable in float32 (the PFM payload type)."""

import json
from pathlib import Path

import numpy as np
import pytest

from tomdepth import RgbImage, ScalarMap, Space, TomMask
from tomdepth.formats import write_pfm, write_rgb

# slanted plane in disparity space: d(x, y) = 8 + x/64 + y/128, dyadic so
# float32 storage is lossless; the matching mono inverse-depth plane is
# 0.5 * d + 2 (also dyadic), i.e. alignment alpha=2, beta=-4 recovers d.
PLANE_BASE = 8.0
MONO_SCALE = 0.5
MONO_SHIFT = 2.0
FOCAL_PX = 1024.0
BASELINE_MM = 64.0


def planar_disparity(width: int = 64, height: int = 64) -> np.ndarray:
    x = np.arange(width, dtype=np.float64)
    y = np.arange(height, dtype=np.float64)
    return PLANE_BASE + x[None, :] / 64.0 + y[:, None] / 128.0


def rect_mask(width: int = 64, height: int = 64, rect=(16, 16, 48, 40)) -> TomMask:
    x0, y0, x1, y1 = rect
    labels = np.zeros((height, width), dtype=np.uint8)
    labels[y0:y1, x0:x1] = 1
    return TomMask(labels)


def textured_image(width: int = 64, height: int = 64, seed: int = 7) -> RgbImage:
    rng = np.random.default_rng(seed)
    return RgbImage(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))


def garbage_inside(disp: np.ndarray, mask: TomMask, seed: int = 3) -> np.ndarray:
    """GT disparity outside the mask, plausible-looking junk inside."""
    rng = np.random.default_rng(seed)
    junk = rng.uniform(0.0, 4.0, size=disp.shape)
    out = disp.copy()
    out[mask.as_bool()] = junk[mask.as_bool()]
    return out


@pytest.fixture
def scene():
    """One in-memory synthetic sample."""
    disp = planar_disparity()
    mask = rect_mask()
    return {
        "disp": disp,
        "gt": ScalarMap(disp, None, Space.DISPARITY_PX),
        "mask": mask,
        "left": textured_image(seed=7),
        "right": textured_image(seed=8),
        "mono_plane": MONO_SCALE * disp + MONO_SHIFT,
    }


def build_synthetic_dataset(root: Path, sample_ids, num_colors: int = 5,
                            width: int = 64, height: int = 64) -> dict:
    """Write a full on-disk dataset + backends + manifest under `root`.

    Layout: rgb/, masks/, gt/, backends/mono (GT inverse-depth plane for
    every in-painted key), backends/stereo (GT outside ToM, junk inside,
    keyed <id>_base). Returns paths keyed by name.
    """
    rgb = root / "rgb"
    masks = root / "masks"
    gt = root / "gt"
    mono_dir = root / "backends" / "mono"
    stereo_dir = root / "backends" / "stereo"
    for d in (rgb, masks, gt, mono_dir, stereo_dir):
        d.mkdir(parents=True, exist_ok=True)

    disp = planar_disparity(width, height)
    entries = []
    for k, sid in enumerate(sample_ids):
        mask = rect_mask(width, height, rect=(8 + k % 4, 8, 40 + k % 4, 36))
        left = textured_image(width, height, seed=100 + k)
        right = textured_image(width, height, seed=200 + k)
        write_rgb(left, rgb / f"{sid}_left.png")
        write_rgb(right, rgb / f"{sid}_right.png")

        from PIL import Image

        Image.fromarray(mask.labels * 255).save(masks / f"{sid}.png")

        gt_map = ScalarMap(disp, None, Space.DISPARITY_PX)
        write_pfm(gt_map, gt / f"{sid}.pfm")

        mono_map = ScalarMap(MONO_SCALE * disp + MONO_SHIFT, None, Space.AFFINE_INVERSE_DEPTH)
        for i in range(num_colors):
            write_pfm(mono_map, mono_dir / f"{sid}_c{i}.pfm")
            # the stereo backend also answers in-painted keys (virtual disparity)
            write_pfm(gt_map, stereo_dir / f"{sid}_c{i}.pfm")
        write_pfm(
            ScalarMap(garbage_inside(disp, mask, seed=300 + k), None, Space.DISPARITY_PX),
            stereo_dir / f"{sid}_base.pfm",
        )
        entries.append(
            {
                "id": sid,
                "left": f"rgb/{sid}_left.png",
                "right": f"rgb/{sid}_right.png",
                "mask": f"masks/{sid}.png",
                "gt": f"gt/{sid}.pfm",
                "gt_space": "disparity_px",
            }
        )

    manifest = {
        "eval_resolution": "full",
        "calibration": {"focal_px": FOCAL_PX, "baseline_mm": BASELINE_MM},
        "samples": entries,
    }
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return {
        "manifest": manifest_path,
        "mono_dir": mono_dir,
        "stereo_dir": stereo_dir,
        "gt_dir": gt,
        "disp": disp,
    }


@pytest.fixture
def dataset(tmp_path):
    return build_synthetic_dataset(tmp_path, ["s1", "s2"])
