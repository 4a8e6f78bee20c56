"""Exception types raised across the package."""


class SlotmatchError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SlotmatchError, ValueError):
    """A parameter or configuration value is invalid."""


class ValidationError(SlotmatchError, ValueError):
    """An input record failed validation.

    ``row`` is the 1-based data row number (header excluded) and ``column``
    the offending column name, when known.
    """

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class ContractError(SlotmatchError, ValueError):
    """A call violated an operation's precondition."""


class SizeError(SlotmatchError, ValueError):
    """An instance is too large for exhaustive enumeration."""


class StageError(SlotmatchError, RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
