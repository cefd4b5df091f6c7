"""Exception types shared across the toolkit.

Everything raised on purpose derives from DriftAuditError so the CLI can
separate data problems (exit 2) from programming errors.
"""


class DriftAuditError(Exception):
    """Base class for all toolkit errors."""


# map construction ----------------------------------------------------

class NonFinite(DriftAuditError):
    """Input contains NaN or infinite entries."""


#: Payload-level alias used by the map file reader.
NonFiniteValue = NonFinite


class EmptyGrid(DriftAuditError):
    """Zero-sized grid where at least one pixel is required."""


class NotNormalized(DriftAuditError):
    """Operation requires a map min-max normalized to [0, 1]."""


class ThresholdOutOfRange(DriftAuditError):
    """Threshold must lie strictly between 0 and 1."""


class ZeroMass(DriftAuditError):
    """Center of mass is undefined for an all-zero map."""


# pairwise metrics ----------------------------------------------------

class DimensionMismatch(DriftAuditError):
    """The two grids being compared have different shapes."""


class ThresholdMismatch(DriftAuditError):
    """Masks were thresholded at different levels."""


# cohort --------------------------------------------------------------

class MissingPrediction(DriftAuditError):
    """A sample lacks a prediction for a declared (architecture, phase)."""


class ZeroCount(DriftAuditError):
    """Class counts must be positive to invert."""


class EmptyCohort(DriftAuditError):
    """No defined values left to aggregate for a metric."""


# file formats --------------------------------------------------------

class MapFormatError(DriftAuditError):
    """A map container file violates the binary layout."""


class BadMagic(MapFormatError):
    """File does not start with the map container magic."""


class TruncatedPayload(MapFormatError):
    """Payload length disagrees with the header dimensions."""


class InvalidDimensions(MapFormatError):
    """Header declares a zero-sized grid."""


class IoFailure(DriftAuditError):
    """Underlying filesystem operation failed."""


class SchemaViolation(DriftAuditError):
    """Manifest document violates the schema.

    ``location`` is a JSON-pointer-style path into the offending document.
    """

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class DanglingMapRef(DriftAuditError):
    """Manifest references a map file that does not exist."""


class DuplicateSampleId(DriftAuditError):
    """Two samples share an id."""


# report --------------------------------------------------------------

class IncompleteCoverage(DriftAuditError):
    """Records do not cover every declared (architecture, method) pair."""


class SingleMethod(DriftAuditError):
    """Cross-method comparison needs at least two methods."""


class UnsupportedFormat(DriftAuditError):
    """Unknown report output format."""


# synthetic data ------------------------------------------------------

class ClippedSupport(DriftAuditError):
    """Generated shape would be clipped by the grid boundary."""
