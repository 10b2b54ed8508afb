"""Exception hierarchy shared across the package."""


class H2HError(Exception):
    """Base class for all package errors."""


class DimensionError(H2HError, ValueError):
    """Array shapes are inconsistent or too small for an operation."""


class ParameterError(H2HError, ValueError):
    """A scalar parameter is outside its admissible domain."""


class NumericalError(H2HError, ArithmeticError):
    """A numerical kernel failed (non-convergence, non-finite iterate).

    ``state`` carries whatever diagnostic context the raiser had, e.g. the
    last finite solver iterate.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class DataError(H2HError):
    """Input data could not be read or does not fit the requested protocol."""


class FormatError(DataError):
    """A file exists but its format is unsupported or malformed."""


class ProtocolError(DataError):
    """A dataset manifest is inconsistent with an evaluation protocol."""


class ConfigError(H2HError, ValueError):
    """An experiment configuration is invalid."""
