"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameter value, option combination, or unsatisfiable setting."""


class InputError(ValueError):
    """Structurally invalid or mutually inconsistent data passed to an operation."""


class InsufficientSeedsError(InputError):
    """Fewer qualifying individuals than requested seeds."""


class EstimationError(ValueError):
    """Estimate undefined for the given sample."""


class ParseError(InputError):
    """A data file does not match its declared schema."""
