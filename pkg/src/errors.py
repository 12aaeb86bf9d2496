"""
Error Types
Exception hierarchy shared by every module. Exit codes follow the CLI contract.
"""

from typing import List, Optional

from src import config


class ToolkitError(Exception):
    """Base class for all toolkit errors."""

    exit_code = config.EXIT_INPUT_ERROR


class InputError(ToolkitError):
    """Raised when an input file, argument or value is unusable."""


class ParseError(InputError):
    """Malformed input file."""


class GeometryError(InputError):
    """
    Invalid zone geometry.

    Attributes:
        diagnostics: One message per rejected feature
    """

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        self.diagnostics = list(diagnostics or [])
        if self.diagnostics:
            message = message + ": " + "; ".join(self.diagnostics)
        super().__init__(message)


class ConflictError(InputError):
    """Two groups claim the same source zone."""


class OutOfBand(InputError):
    """Latitude outside the UTM validity band."""


class BadZoneOverride(InputError):
    """Requested UTM zone is not the natural zone or one of its neighbours."""


class NumericalDivergence(InputError):
    """Inverse projection failed to converge (corrupt input)."""


class DomainError(InputError, ValueError):
    """Argument outside the domain of an operation."""


class EmptyNetwork(InputError):
    """Operation needs at least one node or edge."""


class InsufficientData(InputError):
    """Too few usable points for a regression."""


class DegenerateX(InputError):
    """All regression abscissas are equal."""


class UnknownNode(InputError, KeyError):
    """Node id not present in the network."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class StageError(ToolkitError):
    """
    Failure inside a pipeline stage.

    Attributes:
        stage: Stage name (convert, assign, build, metrics, dist, fit)
        cause: The original exception
    """

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        if isinstance(cause, ToolkitError):
            self.exit_code = cause.exit_code
        else:
            self.exit_code = config.EXIT_INTERNAL_ERROR
        super().__init__(f"stage '{stage}' failed: {cause}")
