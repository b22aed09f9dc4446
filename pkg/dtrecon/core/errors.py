"""
Error hierarchy for dtrecon.

Every error raised by library code derives from DTReconError so the CLI can
map a whole family to one exit code.
"""


class DTReconError(Exception):
    """Base class for all dtrecon errors."""


class InvalidArgumentError(DTReconError, ValueError):
    """Bad parameter, dimension mismatch or out-of-range index."""


class UnsupportedScaleError(DTReconError):
    """An exhaustive routine was asked to run beyond its configured limit."""

    def __init__(self, operation: str, n: int, limit: int):
        super().__init__(f"{operation} supports n <= {limit}, got n = {n}")
        self.operation = operation
        self.n = n
        self.limit = limit


class TreeParseError(DTReconError, ValueError):
    """Malformed decision-tree text."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class WriteOnceError(DTReconError, RuntimeError):
    """Attempt to overwrite a resolved partial-tree node."""


class QueryBudgetError(DTReconError, RuntimeError):
    """A single answer used more oracle queries than its hard budget."""
