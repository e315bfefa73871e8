"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A parameter combination that cannot be run.

    ``field`` names the offending parameter when one is identifiable.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class TraceFormatError(ValueError):
    """A malformed row in a CSV trace. ``row`` is the 1-based data row index."""

    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


class FifoOverflowError(RuntimeError):
    """The hybrid window's flow-id FIFO ran out of free rows."""
