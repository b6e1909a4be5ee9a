"""File I/O: PFM float maps, 16-bit PNG depth, class-id masks, dataset manifests.

PFM is the canonical interchange container for backend outputs and distilled
labels: header ``Pf\\n<width> <height>\\n<scale>\\n``, scale < 0 means
little-endian, payload rows bottom-up, 4-byte floats. Invalid pixels are
serialized as +inf so validity survives the container.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .core import RgbImage, ScalarMap, Space, StereoCalibration, TomMask
from .errors import ClassMapError, DomainError, FormatError, ManifestError

__all__ = [
    "read_pfm",
    "write_pfm",
    "read_png16_depth",
    "write_png16_depth",
    "read_rgb",
    "write_rgb",
    "read_class_raster",
    "collapse_mask",
    "ClassCollapseRule",
    "SampleRecord",
    "DatasetManifest",
    "load_manifest",
]


def _atomic_write(path: Path, payload: bytes) -> None:
    # temp-then-rename so a crashed run never leaves a partial file
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_pfm(path, space: Space = Space.DISPARITY_PX) -> ScalarMap:
    """Read a single-channel PFM file into a ScalarMap.

    Rows are normalized from the container's bottom-up order to top-down.
    Non-finite payload values are marked invalid. The container carries no
    unit information, so the caller supplies the space tag (default:
    disparity, the Middlebury convention).
    """
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic == b"PF":
            raise FormatError(f"{path}: 3-channel PFM not supported (header 'PF')")
        if magic != b"Pf":
            raise FormatError(f"{path}: bad PFM magic {magic!r}")
        dims = f.readline().split()
        try:
            width, height = int(dims[0]), int(dims[1])
        except (IndexError, ValueError):
            raise FormatError(f"{path}: malformed PFM dimension line {dims!r}") from None
        if width < 1 or height < 1:
            raise FormatError(f"{path}: bad PFM dims {width}x{height}")
        try:
            scale = float(f.readline().strip())
        except ValueError:
            raise FormatError(f"{path}: malformed PFM scale line") from None
        payload = f.read(width * height * 4)
    if len(payload) != width * height * 4:
        raise FormatError(
            f"{path}: truncated PFM payload ({len(payload)} of {width * height * 4} bytes)"
        )
    endian = "<" if scale < 0 else ">"
    data = np.frombuffer(payload, dtype=endian + "f4").reshape(height, width)
    data = data[::-1]  # bottom-up on disk, top-down in memory
    return ScalarMap(data.astype(np.float64), np.isfinite(data), space)


def write_pfm(smap: ScalarMap, path) -> None:
    """Write a ScalarMap as a little-endian PFM; invalid pixels become +inf."""
    data = smap.values.astype(np.float32)
    data = np.where(smap.valid, data, np.float32(np.inf))
    header = f"Pf\n{smap.width} {smap.height}\n-1.0\n".encode("ascii")
    _atomic_write(Path(path), header + data[::-1].astype("<f4").tobytes())


def read_png16_depth(path, unit_mm: float = 1.0) -> ScalarMap:
    """Read a 16-bit grayscale PNG as metric depth.

    Raw value 0 is the invalid sentinel; v > 0 maps to v * unit_mm
    millimeters (unit_mm defaults to the identity: raw counts are mm).
    """
    path = Path(path)
    with Image.open(path) as img:
        # Pillow maps 16-bit grayscale PNG to mode I;16 (or I on old versions)
        if img.mode not in ("I;16", "I;16B", "I"):
            raise FormatError(f"{path}: expected 16-bit grayscale PNG, got mode {img.mode!r}")
        raw = np.asarray(img, dtype=np.int64)
    if raw.min() < 0 or raw.max() > 65535:
        raise FormatError(f"{path}: sample values exceed 16-bit range")
    valid = raw > 0
    return ScalarMap(np.where(valid, raw * float(unit_mm), 0.0), valid, Space.DEPTH_MM)


def write_png16_depth(smap: ScalarMap, path, unit_mm: float = 1.0) -> None:
    """Write metric depth as 16-bit grayscale PNG; invalid pixels become 0."""
    if smap.space is not Space.DEPTH_MM:
        raise DomainError(f"expected depth_mm map, got {smap.space.value}")
    counts = np.rint(np.where(smap.valid, smap.values / float(unit_mm), 0.0))
    if counts.min() < 0 or counts.max() > 65535:
        raise DomainError("depth values leave the 16-bit range at this unit")
    img = Image.fromarray(counts.astype(np.uint16))  # uint16 maps to mode I;16
    buf = _encode_png(img)
    _atomic_write(Path(path), buf)


def _encode_png(img: Image.Image) -> bytes:
    import io

    out = io.BytesIO()
    img.save(out, format="PNG")
    return out.getvalue()


def read_rgb(path) -> RgbImage:
    """Read an 8-bit RGB image (PNG/JPEG)."""
    with Image.open(path) as img:
        return RgbImage(np.asarray(img.convert("RGB"), dtype=np.uint8))


def write_rgb(image: RgbImage, path) -> None:
    _atomic_write(Path(path), _encode_png(Image.fromarray(image.pixels, mode="RGB")))


def read_class_raster(path) -> np.ndarray:
    """Read an 8-bit indexed/grayscale PNG of integer class ids."""
    with Image.open(path) as img:
        if img.mode not in ("L", "P"):
            img = img.convert("L")
        return np.asarray(img, dtype=np.int64)


@dataclass(frozen=True)
class ClassCollapseRule:
    """Maps dataset-specific class ids onto the binary ToM/Other split."""

    tom_classes: frozenset[int]
    other_classes: frozenset[int]

    def __post_init__(self):
        tom = frozenset(int(c) for c in self.tom_classes)
        other = frozenset(int(c) for c in self.other_classes)
        overlap = tom & other
        if overlap:
            raise ClassMapError(f"classes {sorted(overlap)} appear in both sets")
        object.__setattr__(self, "tom_classes", tom)
        object.__setattr__(self, "other_classes", other)


def collapse_mask(raw: np.ndarray, rule: ClassCollapseRule) -> TomMask:
    """Collapse a class-id raster into a binary ToM mask.

    Every class id observed in the raster must belong to exactly one of the
    rule's two sets; an uncovered id raises ClassMapError naming it.
    """
    raw = np.asarray(raw)
    observed = np.unique(raw)
    covered = rule.tom_classes | rule.other_classes
    for cid in observed:
        if int(cid) not in covered:
            raise ClassMapError(f"class id {int(cid)} not covered by the collapse rule")
    return TomMask(np.isin(raw, sorted(rule.tom_classes)).astype(np.uint8))


@dataclass(frozen=True)
class SampleRecord:
    """One dataset sample: image paths plus optional mask, GT, calibration.

    Paths are stored absolute after manifest loading (the manifest file
    holds them relative to its own location).
    """

    id: str
    left: Path
    right: Path | None = None
    mask: Path | None = None
    gt: Path | None = None
    gt_space: Space | None = None
    calibration: StereoCalibration | None = None

    @property
    def is_stereo(self) -> bool:
        return self.right is not None


@dataclass(frozen=True)
class DatasetManifest:
    """Validated binding between a dataset on disk and the pipeline."""

    samples: tuple[SampleRecord, ...]
    class_map: ClassCollapseRule | None
    calibration: StereoCalibration | None
    eval_resolution: str  # "full" | "quarter"
    root: Path

    def calibration_for(self, record: SampleRecord) -> StereoCalibration | None:
        return record.calibration or self.calibration


def _parse_calibration(obj, where: str) -> StereoCalibration:
    try:
        return StereoCalibration(float(obj["focal_px"]), float(obj["baseline_mm"]))
    except (KeyError, TypeError, ValueError) as e:
        raise ManifestError(f"{where}: bad calibration entry: {e}") from None


def _resolve(root: Path, rel, sample_id: str, field_name: str) -> Path:
    p = Path(rel)
    if p.is_absolute():
        raise ManifestError(f"sample {sample_id!r}: {field_name} path must be relative")
    resolved = root / p
    if not resolved.exists():
        raise ManifestError(f"sample {sample_id!r}: {field_name} path {rel!r} does not exist")
    return resolved


def load_manifest(path) -> DatasetManifest:
    """Load and eagerly validate a JSON dataset manifest.

    See README for the schema. Raises ManifestError naming the offending
    sample id on duplicate ids, dangling paths, or bad enum tokens.
    """
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest {path} does not exist")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest {path}: invalid JSON: {e}") from None
    root = path.parent

    eval_resolution = doc.get("eval_resolution", "full")
    if eval_resolution not in ("full", "quarter"):
        raise ManifestError(f"unknown eval_resolution {eval_resolution!r}")

    calibration = None
    if "calibration" in doc:
        calibration = _parse_calibration(doc["calibration"], "manifest")

    class_map = None
    if "class_map" in doc:
        cm = doc["class_map"]
        try:
            class_map = ClassCollapseRule(frozenset(cm["tom"]), frozenset(cm["other"]))
        except (KeyError, TypeError) as e:
            raise ManifestError(f"bad class_map entry: {e}") from None

    records = []
    seen = set()
    for entry in doc.get("samples", []):
        sid = entry.get("id")
        if not sid or not isinstance(sid, str):
            raise ManifestError(f"sample entry missing string id: {entry!r}")
        if sid in seen:
            raise ManifestError(f"duplicate sample id {sid!r}")
        seen.add(sid)
        if "left" not in entry:
            raise ManifestError(f"sample {sid!r}: missing left image path")
        gt_space = None
        if "gt_space" in entry:
            try:
                gt_space = Space(entry["gt_space"])
            except ValueError:
                raise ManifestError(
                    f"sample {sid!r}: unknown gt_space {entry['gt_space']!r}"
                ) from None
        if "gt" in entry and gt_space is None:
            raise ManifestError(f"sample {sid!r}: gt path given without gt_space")
        sample_calib = None
        if "calibration" in entry:
            sample_calib = _parse_calibration(entry["calibration"], f"sample {sid!r}")
        records.append(
            SampleRecord(
                id=sid,
                left=_resolve(root, entry["left"], sid, "left"),
                right=_resolve(root, entry["right"], sid, "right") if "right" in entry else None,
                mask=_resolve(root, entry["mask"], sid, "mask") if "mask" in entry else None,
                gt=_resolve(root, entry["gt"], sid, "gt") if "gt" in entry else None,
                gt_space=gt_space,
                calibration=sample_calib,
            )
        )
    return DatasetManifest(
        samples=tuple(records),
        class_map=class_map,
        calibration=calibration,
        eval_resolution=eval_resolution,
        root=root,
    )
