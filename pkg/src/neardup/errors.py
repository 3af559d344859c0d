"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
InternalError -> 3.
"""


class NearDupError(Exception):
    """Base class for all toolkit errors."""


class UsageError(NearDupError):
    """Invalid configuration or arguments."""


class DataError(NearDupError):
    """Malformed or inconsistent input data."""


class InternalError(NearDupError):
    """An internal invariant was violated; indicates a bug."""
