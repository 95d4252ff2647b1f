"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError/DatasetError -> 2,
TransportError -> 3, NumericError -> 4.
"""


class SparseTagError(Exception):
    """Base class for all package errors."""


class ConfigError(SparseTagError):
    """Invalid configuration value, flag, or config file."""


class DatasetError(SparseTagError):
    """Malformed or invariant-violating dataset input."""


class TransportError(SparseTagError):
    """Remote provider failure (network, non-2xx, exhausted retries).

    Carries the hash of the failing request so cached/logged entries can
    be correlated.
    """

    def __init__(self, message: str, *, request_hash: str | None = None):
        super().__init__(message)
        self.request_hash = request_hash


class NumericError(SparseTagError):
    """Numerical failure during training (NaN loss, invalid matrix)."""
