"""Exception types raised by the library."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateInputError(ValueError):
    """The input is valid but leaves nothing to compute (e.g. no matched cells)."""


class GenerationFailure(RuntimeError):
    """Rejection sampling could not satisfy its constraint."""


class NumericFailure(ArithmeticError):
    """A numerical evaluation produced a non-finite value."""


class FormatError(ValueError):
    """A file does not follow its declared text format.

    ``line`` is the 1-based line number of the offending line, if known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
