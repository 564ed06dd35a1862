"""Exception hierarchy shared by every module of the package."""


class AldagError(Exception):
    """Base class for all errors raised by aldaglearn."""


class DataError(AldagError):
    """Problem with the input data (exit code 1 in the CLI)."""


class ParseError(DataError):
    pass


class MissingValueError(DataError):
    pass


class EmptyDataError(DataError):
    pass


class DegenerateBinsError(DataError):
    pass


class CycleError(AldagError):
    pass


class OrderMismatchError(AldagError):
    pass


class InvalidMergeError(AldagError):
    pass


class TooManyOrdersError(AldagError):
    """Raised when an order enumeration would exceed its cap."""

    def __init__(self, cap, message=None):
        self.cap = cap
        super().__init__(message or f"number of orders exceeds the cap of {cap}")
