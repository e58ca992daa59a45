"""Exception types shared across the package."""


class TopochainError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TopochainError):
    """Invalid model, parameters, dimensions, or input state."""


class NumericalError(TopochainError):
    """Time evolution produced non-finite amplitudes or failed to converge."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index
