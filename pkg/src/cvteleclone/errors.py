"""Exception hierarchy shared by all modules."""


class TelecloneError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(TelecloneError, ValueError):
    pass


class DomainError(TelecloneError, ValueError):
    """A parameter lies outside the region where the construction is defined."""


class NumericalDegeneracyError(TelecloneError, ArithmeticError):
    pass


class DegeneratePortError(NumericalDegeneracyError):
    """The measured quadratures carry no information about the input mode."""
