"""Exception hierarchy shared across the package."""


class SegrrError(Exception):
    """Base class for all package errors."""


class ContractViolation(SegrrError, ValueError):
    """A caller broke an operation's precondition (shape, ordering, range)."""


class NumericalError(SegrrError, ArithmeticError):
    """An iterative routine failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ParameterError(SegrrError, ValueError):
    """Invalid parameter values for a generator, schedule or oracle."""


class ValidationError(SegrrError, ValueError):
    """A constructed object does not satisfy its invariants."""


class InfeasibleError(SegrrError, ValueError):
    """A linear system has no solution."""


class RegimeMismatchError(ParameterError):
    """A step-size rule was requested for a problem outside its regime."""


class DivergenceError(SegrrError, FloatingPointError):
    """Iterates blew up during a solver run.

    ``partial`` is filled by the driver with the rows recorded before the blow-up.
    """

    def __init__(self, message, epoch, inner, partial=None):
        super().__init__(message)
        self.epoch = epoch
        self.inner = inner
        self.partial = partial


class ConfigError(SegrrError, ValueError):
    """Experiment configuration rejected; ``path`` names the offending key."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
