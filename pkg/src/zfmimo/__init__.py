"""Performance analysis of zero-forcing MIMO receivers over correlated Rician channels."""

from . import kernels
from .errors import (
    CancellationWarning,
    DomainError,
    ExactLawUnavailable,
    NumericOverflow,
    ParameterError,
    QuadratureError,
    UnsupportedCaseError,
    ZfMimoError,
)
from .series import SeriesPolicy, SeriesResult, sum_series

__version__ = "0.1.0"
