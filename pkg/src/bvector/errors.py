"""Exception types raised across the package."""


class BVectorError(Exception):
    """Base class for all package errors."""


class DegenerateInput(BVectorError, ValueError):
    """Input has no direction (zero vector) or is otherwise unusable."""


class DimensionMismatch(BVectorError, ValueError):
    """Two operands disagree in length or code width."""


class InvalidConfig(BVectorError, ValueError):
    """A parameter or configuration violates its precondition."""


class NumericalFailure(BVectorError, ArithmeticError):
    """Training produced a non-finite value."""

    def __init__(self, message, *, epoch=None, block=None):
        super().__init__(message)
        self.epoch = epoch
        self.block = block


class MissingVector(BVectorError, KeyError):
    """A trial or probe references an id absent from the store."""

    def __init__(self, key):
        super().__init__(key)
        self.key = key

    def __str__(self):
        return f"no vector for id {self.key!r}"


class ParseError(BVectorError, ValueError):
    """Malformed file content; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CorruptModel(ParseError):
    """Model file failed its integrity check (truncation or CRC mismatch)."""
