"""Exception hierarchy shared by all driftkit modules.

Each class maps to one failure category so the CLI can translate them
into distinct exit codes.
"""


class DriftkitError(Exception):
    """Base class for all driftkit errors."""


class ConfigError(DriftkitError):
    """Invalid or inconsistent configuration values."""


class ShapeError(DriftkitError):
    """Array dimensions do not satisfy an operation's contract."""


class DataError(DriftkitError):
    """Dataset-level problem (empty dataset, bad labels, ...)."""


class ParseError(DataError):
    """Malformed input file. Carries the offending row when known."""

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class FormatError(DataError):
    """Binary file does not match the expected on-disk format."""


class StateError(DriftkitError):
    """Stale or mismatched internal state (e.g. a forward cache)."""


class NumericError(DriftkitError):
    """Non-finite values encountered where finite ones are required."""


class EmptyMaskError(DataError):
    """Feature selection kept no features. The report is still attached."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
