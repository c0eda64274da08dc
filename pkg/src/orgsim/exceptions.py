"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameter combination or malformed configuration."""


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class SimulationStateError(RuntimeError):
    """Internal state became inconsistent (a bug, not a user error)."""
