"""Exception types shared across the package."""


class NumericalAbort(RuntimeError):
    """Raised when an integration or simulation leaves its validity domain.

    Carries a human-readable location (step index or time stamp) so a driver
    can report where the run died. Mapped to exit code 3 by the CLI.
    """


class ConfigError(ValueError):
    """Invalid experiment configuration. Mapped to exit code 2 by the CLI."""
