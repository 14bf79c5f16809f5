"""Exception taxonomy shared by the whole toolkit.

Every error carries a short machine-greppable ``code`` that the CLI echoes
on stderr, so scripts can branch on failure modes without parsing prose.
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all seguq errors."""

    code = "error"


class BadMagicError(ToolkitError):
    """File does not start with the PMAP magic bytes."""

    code = "bad-magic"


class TruncatedFileError(ToolkitError):
    """Container payload is shorter than the header promises."""

    code = "truncated-file"


class DimensionOverflowError(ToolkitError):
    """Declared dimensions are zero or unreasonably large."""

    code = "dimension-overflow"


class ValueOutOfRangeError(ToolkitError, ValueError):
    """A probability value falls outside [0, 1] (or is NaN)."""

    code = "value-out-of-range"


class UnsupportedFormatError(ToolkitError):
    """Image or container format is not one the toolkit accepts."""

    code = "unsupported-format"


class ModeShapeMismatchError(ToolkitError):
    """Aggregation mode is incompatible with the stack's K/T shape."""

    code = "mode-shape-mismatch"


class IndexOutOfRangeError(ToolkitError, IndexError):
    code = "index-out-of-range"


class DomainError(ToolkitError, ValueError):
    """Scalar argument outside the mathematical domain of the function."""

    code = "domain-error"


class ShapeMismatchError(ToolkitError):
    """Two rasters that must align pixel-for-pixel do not."""

    code = "shape-mismatch"


class ConfigMismatchError(ToolkitError):
    """Reports with different binning configurations cannot be pooled."""

    code = "config-mismatch"


class EmptyInputError(ToolkitError, ValueError):
    code = "empty-input"


class MissingMaskError(ToolkitError):
    """An image in a dataset tree has no companion mask file."""

    code = "missing-mask"


class UnreadableImageError(ToolkitError):
    """An image file exists but cannot be decoded."""

    code = "unreadable-image"


class MissingPreferenceError(ToolkitError):
    """Preferred-member strategy lacks a choice for some duplicate group."""

    code = "missing-preference"


class InvalidSpecError(ToolkitError, ValueError):
    """Synthetic-generator specification violates its own constraints."""

    code = "invalid-spec"


class PairingError(ToolkitError):
    """Prediction/ground-truth directories do not pair one-to-one by stem."""

    code = "unpaired-cases"
