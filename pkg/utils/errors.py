"""
Exception hierarchy for the NEPDF causal toolkit.

Every error raised on purpose by the library derives from ``NepdfError``.
Errors about bad input values also derive from ``ValueError`` so callers
can catch them the usual way. ``exit_code`` is what the CLI returns when
the error reaches a command boundary.
"""


class NepdfError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 1


class ConfigError(NepdfError, ValueError):
    """Run configuration or command-line usage is invalid."""

    exit_code = 2


# ─── nepdf ───────────────────────────────────────────────────────────────────


class EmptyPair(NepdfError, ValueError):
    """No complete observation survives missing-value removal."""


class LengthMismatch(NepdfError, ValueError):
    """Paired sequences differ in length."""


class NonPositiveForLog(NepdfError, ValueError):
    """Log-space binning requested for values that are not all positive."""


class EmptyInput(NepdfError, ValueError):
    """An operation received no values."""


class InvalidK(NepdfError, ValueError):
    """Histogram size K is below the supported minimum."""


class InvalidLabel(NepdfError, ValueError):
    """A label outside {1, -1, 0}."""


# ─── simgen ──────────────────────────────────────────────────────────────────


class InvalidParams(NepdfError, ValueError):
    """Simulation parameters violate a weight or range constraint."""


class OutOfSupport(NepdfError, ValueError):
    """Spline evaluated outside its knot range."""


# ─── net ─────────────────────────────────────────────────────────────────────


class BadArchitecture(NepdfError, ValueError):
    """Layer shapes do not chain from the input to the output."""


class ShapeMismatch(NepdfError, ValueError):
    """Array shape does not match what the network expects."""


class EmptyDataset(NepdfError, ValueError):
    """Training or evaluation received no samples."""


class LabelOutOfRange(NepdfError, ValueError):
    """A label the selected classifier cannot represent."""


class NoKinkFreeBatch(NepdfError):
    """Gradient check could not draw inputs away from every ReLU and max-pool kink."""


class ModelFormatError(NepdfError):
    """Model file is not in the expected binary layout."""


class FormatVersionMismatch(ModelFormatError):
    """Model file was written by an unsupported format version."""


class CorruptChecksum(ModelFormatError):
    """Model file is truncated or its CRC32 does not match."""


# ─── eval ────────────────────────────────────────────────────────────────────


class DegenerateLabels(NepdfError, ValueError):
    """A metric needs classes that are not present."""


class OutOfRange(NepdfError, ValueError):
    """A probability argument lies outside [0, 1]."""


class ZeroWeightMass(NepdfError, ValueError):
    """All sample weights are zero."""


class TooFewGroups(NepdfError, ValueError):
    """Fewer pair groups than requested folds."""


class ZeroVariance(NepdfError, ValueError):
    """Correlation requested for a constant series."""


class NotADistribution(NepdfError, ValueError):
    """Matrix is not a nonnegative mass-1 histogram."""


class SingularFit(NepdfError, ValueError):
    """Least-squares design matrix is rank deficient."""


# ─── cli / files ─────────────────────────────────────────────────────────────


class DatasetFormatError(NepdfError, ValueError):
    """Pair dataset file violates the CSV layout."""


class OutputLocked(NepdfError):
    """Another invocation holds the output directory lock."""
