"""Exception hierarchy shared by all sqcir modules."""


class SQCIRError(Exception):
    """Base class for every error raised by the package."""


class InvalidInputError(SQCIRError, ValueError):
    """A state, series or argument violates its preconditions."""


class InvalidParameterError(SQCIRError, ValueError):
    """A parameter value makes the requested quantity undefined."""


class DegenerateParameterError(InvalidParameterError):
    """A closed form produced a non-finite value for these parameters."""


class StepSizeError(SQCIRError, RuntimeError):
    """An integration step drove a compartment clearly negative."""

    def __init__(self, message, time=None, step=None):
        super().__init__(message)
        self.time = time
        self.step = step


class DivergenceError(SQCIRError, RuntimeError):
    """The integrated state became non-finite."""

    def __init__(self, message, time=None, step=None):
        super().__init__(message)
        self.time = time
        self.step = step


class ConvergenceError(SQCIRError, RuntimeError):
    """An iterative solver exhausted its budget."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class FitFailureError(SQCIRError, RuntimeError):
    """Every multi-start of a fit failed; carries the best partial result."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(SQCIRError, ValueError):
    """A configuration file or series file could not be accepted."""
