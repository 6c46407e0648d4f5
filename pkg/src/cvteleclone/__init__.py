"""Continuous-variable telecloning: multiuser channel states, protocol simulation, circuit search."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegeneratePortError,
    DomainError,
    InvalidArgumentError,
    NumericalDegeneracyError,
    TelecloneError,
)

__all__ = [
    "__version__",
    "DegeneratePortError",
    "DomainError",
    "InvalidArgumentError",
    "NumericalDegeneracyError",
    "TelecloneError",
]
