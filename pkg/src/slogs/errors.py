"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent or unsupported combination of settings."""


class ParameterError(ValueError):
    """A numeric argument lies outside its admissible range."""


class DomainError(ValueError):
    """A function was evaluated outside its domain (e.g. negative density)."""
