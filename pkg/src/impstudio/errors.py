"""Exception hierarchy shared across the package."""


class StudioError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidDesign(StudioError):
    """A design or element violates a structural invariant."""


class OversizedElement(StudioError):
    """Element is larger than the canvas and cannot be clamped onto it."""


class DimensionMismatch(StudioError):
    """Two grids that must share dimensions do not."""


class EmptyAnnotationSet(StudioError):
    """An aggregation or gate was asked to run on zero inputs."""


class EmptyMask(StudioError):
    """An element rasterized to zero cells at the requested resolution."""


class ConstantTruth(StudioError):
    """Ground-truth map is constant; CC and R^2 are undefined."""


class GenomeLengthMismatch(StudioError):
    """Genome length does not match the design's element count."""


class OptimizationCancelled(StudioError):
    """The caller aborted an optimization run between epochs."""


class CountMismatch(StudioError):
    """Template placeholder count does not match the design element count."""


class NoTemplateForCount(StudioError):
    """The template library has no template with the requested placeholder count."""


class ParseError(StudioError):
    """A serialized record could not be parsed.

    ``line`` is the 1-based line number for line-oriented formats, or None.
    """

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class UnknownSentinel(StudioError):
    """An annotation references a sentinel id missing from the registry."""


class EndpointUnreachable(StudioError):
    """The external predictor endpoint could not be reached."""


class MalformedResponse(StudioError):
    """The external predictor returned an invalid payload."""


class RequestTimeout(StudioError):
    """The external predictor did not answer within the configured timeout."""


class StorageUnavailable(StudioError):
    """The persistence directory cannot be used."""


class CorruptRecord(StudioError):
    """A persisted record failed to load and was quarantined."""
