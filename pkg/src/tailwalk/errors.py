"""Exception types shared across the package."""


class TailwalkError(Exception):
    """Base class; ``exit_code`` is what the CLI returns when this escapes."""

    exit_code = 1


class ConstructionError(TailwalkError, ValueError):
    exit_code = 2


class ConfigError(TailwalkError, ValueError):
    exit_code = 2


class DomainError(TailwalkError, ValueError):
    exit_code = 2


class QuadratureError(TailwalkError, ArithmeticError):
    exit_code = 4


class CertificationFailure(TailwalkError):
    """No grid point qualifies as a translation parameter making the measure direct."""

    exit_code = 3


class DirectnessViolation(TailwalkError):
    """A proposal path had likelihood ratio above one.

    The offending path summary is kept on ``path`` for diagnostics.
    """

    exit_code = 3

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class BudgetExceeded(TailwalkError):
    exit_code = 5
