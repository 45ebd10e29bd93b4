"""Exception and warning classes raised by zfmimo."""


class ZfMimoError(Exception):
    """Base class for all package errors."""


class ParameterError(ZfMimoError, ValueError):
    """Invalid or inconsistent input parameters."""


class DomainError(ZfMimoError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ExactLawUnavailable(ZfMimoError):
    """The exact SNR law does not apply (nonzero conditional mean of the
    intended stream under Rayleigh-Rician fading)."""


class UnsupportedCaseError(ZfMimoError):
    """Requested quantity has no exact expression in this toolkit."""


class NumericOverflow(ZfMimoError, ArithmeticError):
    """A partial sum became non-finite.

    Attributes
    ----------
    last_stable_index : int
        Last series index whose partial sum was finite.
    """

    def __init__(self, message, last_stable_index):
        super().__init__(message)
        self.last_stable_index = last_stable_index


class QuadratureError(ZfMimoError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""


class CancellationWarning(RuntimeWarning):
    """Alternating sum lost too many significant digits to be trusted."""
