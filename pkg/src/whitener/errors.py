"""Exception types shared across the package."""


class WhitenerError(Exception):
    """Base class for package errors."""


class InvalidParameterError(WhitenerError, ValueError):
    """A parameter is outside its documented range."""


class InvalidArgumentError(WhitenerError, ValueError):
    """An input object violates an operation's precondition (wrong size, illegal coloring, ...)."""


class ResourceLimitError(WhitenerError, RuntimeError):
    """An exhaustive search exceeded its configured budget."""


class UnsupportedError(WhitenerError, ValueError):
    """The operation is not defined for these parameters."""


class ContradictionError(WhitenerError, ArithmeticError):
    """A survey update found all colors surely present (Z = 0).

    ``edge`` is the directed edge ``(i, j)`` being updated, when known.
    """

    def __init__(self, message: str, edge=None):
        super().__init__(message)
        self.edge = edge
