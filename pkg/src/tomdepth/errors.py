"""Exception hierarchy shared by all tomdepth modules."""


class TomDepthError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TomDepthError):
    """A value violates the numeric domain of its space (e.g. depth <= 0)."""


class DimensionError(TomDepthError):
    """Raster dimensions are inconsistent or too small for the operation."""


class FormatError(TomDepthError):
    """A file does not conform to its container format."""


class ClassMapError(TomDepthError):
    """A mask contains a class id not covered by the collapse rule."""


class ManifestError(TomDepthError):
    """A dataset manifest is missing, malformed, or references bad paths."""


class BackendError(TomDepthError):
    """An inference backend failed to produce a usable map.

    Carries the backend key and a diagnostic message.
    """

    def __init__(self, key: str, message: str):
        super().__init__(f"backend key {key!r}: {message}")
        self.key = key


class AggregationError(TomDepthError):
    """A map stack cannot be aggregated (empty, or mismatched dims/space)."""


class InsufficientSupport(TomDepthError):
    """Fewer than two usable pixels were available for a least-squares fit."""


class DegenerateFit(TomDepthError):
    """The prediction has zero variance over the fit support."""


class EmptySplit(TomDepthError):
    """No pixels remain after masking for a metric split."""
