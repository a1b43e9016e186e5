"""
Exceptions raised across the DDAE package.

Every error raised on purpose by the package derives from `DDAEError`, so callers (and the command
line front end, which maps them to exit codes) can tell package failures from programming errors.

Classes:
    - DDAEError: Base class of the hierarchy.
    - DDAEConfigError: Invalid parameter or configuration value. The message names the offending
      field or bound.
    - ContractError: A call violated an operation precondition (shape mismatch, level out of range).
    - UnknownTapError: A tap is not part of the network tap index.
    - DataFormatError: A dataset, record file or checkpoint container is malformed.
    - NumericalError: A computation degenerated (non-finite state, vanishing signal coefficient,
      zero-norm feature, covariance outside the PSD tolerance).
"""

from typing import Any, Optional


class DDAEError(Exception):
    """Base class for all errors raised by the package."""


class DDAEConfigError(DDAEError, ValueError):
    """
    Invalid or unsupported value in a configuration object or operation parameter.

    Subclasses `ValueError` so generic callers can catch it as a bad argument.
    """


class ContractError(DDAEError, ValueError):
    """An operation was called outside its preconditions."""


class UnknownTapError(ContractError, KeyError):
    """Requested tap is not present in the network tap index."""

    def __str__(self) -> str:
        # KeyError quotes its argument, keep the plain message.
        return str(self.args[0]) if self.args else ""


class DataFormatError(DDAEError, ValueError):
    """
    Malformed input data.

    Attributes:
        path (Optional[str]): File the error was found in.
        offset (Optional[int]): Byte offset (binary inputs) or line number (text inputs).
    """

    def __init__(
        self, message: str, path: Optional[str] = None, offset: Optional[int] = None
    ) -> None:
        super().__init__(message)
        self.path = path
        self.offset = offset


class NumericalError(DDAEError, ArithmeticError):
    """
    Numerical degeneracy or non-finite state.

    Attributes:
        diagnostics (dict): Context collected at the failure point (step, level histogram,
            gradient norm, minimal eigenvalue, ...).
    """

    def __init__(self, message: str, diagnostics: Optional[dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.diagnostics: dict[str, Any] = diagnostics if diagnostics is not None else {}
