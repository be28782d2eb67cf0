class FountainError(ValueError):
    """Base class for errors raised by fountain_flan."""


class SpecError(FountainError):
    """Invalid degree distribution or non-integral ensemble exponent."""


class GuardViolation(FountainError):
    """A size guard on an exponential-time routine was exceeded."""


class InputFormatError(FountainError):
    """A JSON/CSV input file could not be parsed."""
