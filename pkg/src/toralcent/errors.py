"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ``ParseError`` -> 1,
``PreconditionError`` -> 2, ``NumericalFailure`` -> 3.
"""


class ToralError(Exception):
    """Base class for every error raised by this package."""


class ParseError(ToralError, ValueError):
    """Malformed matrix, polynomial or map input."""


class PreconditionError(ToralError, ValueError):
    """An operation was called on input outside its domain.

    ``clause`` names the failed hypothesis in a short machine-friendly form.
    """

    def __init__(self, message, clause=None):
        super().__init__(message)
        self.clause = clause


class NumericalFailure(ToralError, RuntimeError):
    """A numerical procedure did not converge or could not certify its result."""
