class QResError(Exception):
    """Base class for every error raised by the qres services."""


class ArgumentError(QResError, ValueError):
    pass


class CapacityError(ArgumentError):
    pass


class QubitIndexError(QResError, IndexError):
    pass


class StateError(QResError, RuntimeError):
    pass


class FormatError(QResError, ValueError):
    """Malformed file content. `offset` is the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
