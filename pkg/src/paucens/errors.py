"""Exception hierarchy shared by the library and the command line."""


class PaucEnsError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(PaucEnsError, ValueError):
    """Invalid parameters (ranges, counts, regularizers)."""

    exit_code = 2


class DataError(PaucEnsError, ValueError):
    """Malformed or inconsistent input data."""

    exit_code = 3


class NumericalError(PaucEnsError, RuntimeError):
    """A solver failed to converge or produced non-finite values."""

    exit_code = 4
