"""Exception types shared across the package."""


class SpecprocError(Exception):
    """Base class for all errors raised by this package."""


class UnreachableTolerance(SpecprocError):
    """The requested error tolerance cannot be met within the evaluation budget."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class NotAMeasure(SpecprocError):
    """The requested operation provably does not yield a locally finite measure."""


class Unsupported(SpecprocError):
    """The operand pair falls outside the implemented structural rules."""


class InconsistentGrid(SpecprocError):
    """A frequency grid does not match the measure/process it is used with."""


class InsufficientPairs(SpecprocError):
    """Not enough time pairs at the requested lag for a stationarity check."""


class SeedStreamExhausted(SpecprocError):
    """More random substreams were requested than the configuration allows."""


class ConfigError(SpecprocError):
    """A configuration file or expression failed validation."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)
        self.position = position
