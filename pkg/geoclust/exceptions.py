"""
geoclust error hierarchy
"""


class GeoclustError(Exception):
    """Base class for every error raised by geoclust"""

    exit_code = 1


class InvalidInputError(GeoclustError, ValueError):
    """Bad arguments, malformed files or violated preconditions"""

    exit_code = 3


class EmptySetError(InvalidInputError):
    """A reference set that must be nonempty was empty"""

    def __init__(self, message: str = "empty reference set"):
        super().__init__(message)


class DimensionMismatchError(InvalidInputError):
    """Points of different dimension were combined"""


class EnumerationGuardError(InvalidInputError):
    """An exhaustive enumeration would exceed its configured guard"""


class SeparatorError(GeoclustError):
    """The separator cannot be applied to the given set"""

    exit_code = 3


class PartitionError(GeoclustError):
    """PARTITION could not make progress"""

    exit_code = 2


class LemmaViolationError(GeoclustError):
    """A reassignment certificate could not be produced"""

    exit_code = 2


class GroupingError(GeoclustError):
    """Balanced grouping preconditions do not hold"""

    exit_code = 2


class InvariantViolation(GeoclustError):
    """An invariant suite reported failures"""

    exit_code = 2


EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_BAD_INPUT = 3


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code"""
    if isinstance(exc, GeoclustError):
        return exc.exit_code
    if isinstance(exc, (FileNotFoundError, IsADirectoryError, PermissionError)):
        return EXIT_BAD_INPUT
    # pydantic.ValidationError subclasses ValueError
    if isinstance(exc, ValueError):
        return EXIT_BAD_INPUT
    return 1
