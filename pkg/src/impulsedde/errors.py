"""Exception types and the process exit-code contract.

Every error the library raises derives from ImpulseDDEError and carries
an exit_code so the command line can map failures to documented statuses.
"""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_NUMERIC = 4
EXIT_CERTIFICATE_FAILED = 5
EXIT_CERTIFICATE_INAPPLICABLE = 6


class ImpulseDDEError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidInputError(ImpulseDDEError):
    """Malformed arguments: dimension mismatch, negative time, bad shape."""

    exit_code = EXIT_CONFIG


class ConfigurationError(ImpulseDDEError):
    """Grid commensurability violations and config-file problems."""

    exit_code = EXIT_CONFIG


class UnsupportedConfigurationError(ConfigurationError):
    """Valid input outside the supported regime (e.g. delay exceeding the period)."""


class NotExponentiallyStableError(ImpulseDDEError):
    """An operation that needs exponential stability met an eigenvalue <= 0."""

    exit_code = EXIT_CONFIG


class NonConvergenceError(ImpulseDDEError):
    """Fixed-point iteration exhausted max_iter before reaching tolerance."""

    exit_code = EXIT_NO_CONVERGENCE

    def __init__(self, message, iterations=None, last_ratio=None, last_delta=None):
        super().__init__(message)
        self.iterations = iterations
        self.last_ratio = last_ratio
        self.last_delta = last_delta


class NumericFailureError(ImpulseDDEError):
    """NaN or overflow during integration; at_time locates the failing step."""

    exit_code = EXIT_NUMERIC

    def __init__(self, message, at_time=None):
        super().__init__(message)
        self.at_time = at_time


class InternalConsistencyError(ImpulseDDEError):
    """Derived quantities contradict each other (indicates a bug, not bad input)."""

    exit_code = 1


class PipelineError(ImpulseDDEError):
    """A pipeline stage failed; stage names the step, __cause__ keeps the original.

    The exit code is inherited from the wrapped error when that error is
    ours, so the command line reports the underlying failure class.
    """

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage

    @property
    def exit_code(self):
        cause = self.__cause__
        if isinstance(cause, ImpulseDDEError):
            return cause.exit_code
        return 1
