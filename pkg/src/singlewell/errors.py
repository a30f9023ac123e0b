"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """A grid, config file or parameter set is unusable as given."""


class TruncationError(RuntimeError):
    """A truncation margin (basis size, domain size, tail bound) was violated."""


class RangeError(RuntimeError):
    """A requested quantity lies outside the computed range."""
