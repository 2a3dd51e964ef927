"""Exception hierarchy shared across the package."""


class CoopSenseError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CoopSenseError, ValueError):
    """Invalid configuration value or a scenario that cannot be generated."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UsageError(CoopSenseError, ValueError):
    """An operation was called with arguments outside its contract."""


class ModelError(CoopSenseError):
    """An accuracy model cannot be evaluated (e.g. an empty table)."""


class InfeasibleError(CoopSenseError):
    """No feasible allocation or placement exists for the given inputs."""
