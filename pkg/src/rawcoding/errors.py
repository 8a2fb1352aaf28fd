"""Exception types shared across the package."""


class RawCodingError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RawCodingError, ValueError):
    """A point or parameter lies outside the domain of an operation."""


class PrecisionError(RawCodingError):
    """A trajectory was requested beyond the exact precision of its source."""


class ResourceError(RawCodingError):
    """A configured size cap (refinement order, interval count) was exceeded."""


class InputError(RawCodingError, ValueError):
    """Malformed external input: files, streams, probability lists."""
