"""Exception types shared across the package.

The CLI maps these to exit codes: ConfigError -> 1, CapacityError and
IntegrationError -> 2, ValidationFailure -> 3.
"""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class CapacityError(RuntimeError):
    """A requested computation exceeds a documented size guard."""


class IntegrationError(RuntimeError):
    """The ODE integrator failed to reach the requested time."""

    def __init__(self, message: str, last_time: float | None = None):
        super().__init__(message)
        self.last_time = last_time


class ValidationFailure(RuntimeError):
    """One or more built-in validation checks failed."""
