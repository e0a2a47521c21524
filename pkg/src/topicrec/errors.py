"""Exception classes shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class DataError(ValueError):
    """Malformed, missing, or contradictory input data."""


class NumericalError(ArithmeticError):
    """Non-finite values encountered during optimization."""
