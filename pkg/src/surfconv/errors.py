"""Exception types shared across the package.

Validation problems (bad arguments, malformed configs or files) derive from
:class:`ValidationError`; failures during an otherwise well-formed run derive
from :class:`RuntimeFailure`.  The CLI maps the former to exit code 1 and the
latter to exit code 2.
"""


class SurfconvError(Exception):
    """Base class for all package errors."""


class ValidationError(SurfconvError):
    """Bad input: arguments, configuration, or file contents."""


class RuntimeFailure(SurfconvError):
    """A well-formed request that could not be carried out."""


class ConfigError(ValidationError):
    """Invalid or contradictory run configuration."""


class ZeroVector(ValidationError):
    """An offset or direction with zero length where one is required."""


class NonPositiveSpacing(ValidationError):
    """Kernel spacing d must be strictly positive."""


class ZeroGroup(RuntimeFailure):
    """A normalization group whose weights sum to zero."""


class TooCoarse(ValidationError):
    """A sampling request below the minimum usable resolution."""


class LimitExceeded(ValidationError):
    """A sampling request beyond the supported size guard."""


class TooFewPoints(ValidationError):
    """Not enough points to build the requested graph."""


class ParseError(ValidationError):
    """Malformed mesh file; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingUV(ValidationError):
    """The mesh has no texture coordinates but an operation needs them."""


class DegenerateMesh(ValidationError):
    """The mesh has no usable surface area."""


class ShapeError(ValidationError):
    """An array with the wrong shape or dtype for the operation."""


class SpecMismatch(ValidationError):
    """A network spec inconsistent with the weights or graph pyramid."""


class FormatError(ValidationError):
    """A serialized artifact that does not follow the documented layout."""


class ChecksumError(ValidationError):
    """Stored checksum does not match the payload."""
