"""Exception hierarchy shared by the package and the CLI exit codes."""


class TubalError(Exception):
    """Base class for all package errors."""


class ShapeError(TubalError, ValueError):
    """Operand dimensions are inconsistent."""


class ArgumentError(TubalError, ValueError):
    """An argument is outside its admissible range."""


class NumericalError(TubalError, ArithmeticError):
    """A numerical kernel failed or produced inconsistent output."""


class SVDError(NumericalError):
    """SVD of a transform-domain slice did not converge."""

    def __init__(self, slice_index, msg=None):
        self.slice_index = slice_index
        super().__init__(msg or f"SVD failed on transform-domain slice {slice_index}")


class DivergenceError(NumericalError):
    """An iterative solver produced a non-finite or exploding objective.

    The partial trace (up to the last finite iterate) is attached as
    ``trace``.
    """

    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


class FormatError(TubalError, ValueError):
    """Malformed or truncated file payload."""

    def __init__(self, msg, offset=None):
        if offset is not None:
            msg = f"{msg} (at byte offset {offset})"
        super().__init__(msg)
        self.offset = offset
