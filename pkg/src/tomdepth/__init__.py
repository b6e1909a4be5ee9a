"""tomdepth: depth/disparity pseudo-label distillation and evaluation for
transparent and mirror (ToM) surfaces.

The pipeline turns RGB datasets with ToM segmentation masks into
depth/disparity pseudo-label datasets by in-painting ToM regions with
seeded uniform colors, running opaque mono/stereo inference backends on the
augmented images, aggregating the per-color predictions with a per-pixel
median, and (for stereo) merging affinely aligned mono predictions into
stereo disparities. A full evaluation protocol (delta thresholds, MAE,
Abs Rel, RMSE, bad-tau, LSE rescaling, All/ToM/Other splits) scores the
results.
"""

from .backend import BackendSpec, base_key, infer_mono, infer_stereo, mono_key
from .core import (
    AffineAlignment,
    InpaintColor,
    RgbImage,
    ScalarMap,
    Space,
    StereoCalibration,
    TomMask,
    depth_to_disparity,
    disparity_to_depth,
    resize_quarter,
)
from .distill import (
    DistillConfig,
    Strategy,
    apply_affine,
    distill_mono,
    distill_stereo_merged,
    distill_stereo_virtual_disparity,
    fit_affine_lse,
    median_aggregate,
    merge_with_alignment,
)
from .errors import (
    AggregationError,
    BackendError,
    ClassMapError,
    DegenerateFit,
    DimensionError,
    DomainError,
    EmptySplit,
    FormatError,
    InsufficientSupport,
    ManifestError,
    TomDepthError,
)
from .formats import (
    ClassCollapseRule,
    DatasetManifest,
    SampleRecord,
    collapse_mask,
    load_manifest,
    read_pfm,
    read_png16_depth,
    read_rgb,
    write_pfm,
    write_png16_depth,
    write_rgb,
)
from .inpaint import ColorPalette, inpaint, sample_palette, warp_mask_left_to_right
from .metrics import (
    BAD_THRESHOLDS_PX,
    DELTA_THRESHOLDS,
    MetricReport,
    aggregate_reports,
    bad_tau,
    delta_accuracy,
    error_metrics,
    eval_rescale,
    evaluate_sample,
)

__version__ = "0.1.0"
