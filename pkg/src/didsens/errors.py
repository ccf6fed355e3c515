"""Exception taxonomy.

The CLI maps these onto exit codes: ConfigError -> 2, InfeasibleMatchError
-> 3, DataError (and subclasses) -> 4.
"""


class DidsensError(Exception):
    """Base class for all package errors."""


class ConfigError(DidsensError):
    """Bad configuration or usage: unknown options, missing columns, bad YAML."""


class DataError(DidsensError):
    """Malformed input data: parse failures, out-of-domain values."""


class StructuralError(DataError):
    """Records, pairs, or quadruples that violate structural preconditions."""


class DegenerateDataError(DataError):
    """Data carries no information for the requested analysis."""


class InfeasibleMatchError(DidsensError):
    """No matching satisfies the declared constraints."""
