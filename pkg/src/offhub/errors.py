"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid configuration, scenario, or input data."""


class DomainError(ValueError):
    """Argument outside the domain of a physical model."""


class InvariantViolation(RuntimeError):
    """A runtime balance or bound check failed."""
