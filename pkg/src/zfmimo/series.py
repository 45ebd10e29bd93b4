"""Tolerance-driven summation of infinite series.

Terms are pulled one at a time from a term source and accumulated until the
relative contribution of the newest term drops below the tolerance, or the
index cap is reached.  The result carries enough diagnostics (terms used,
convergence flag, largest term seen) for callers to judge whether the value
can be trusted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Union

from .errors import NumericOverflow, ParameterError

__all__ = [
    "SeriesPolicy",
    "SeriesResult",
    "sum_series",
    "DYNAMIC_RANGE_LIMIT",
]

# Above this max|term| / |sum| ratio, double precision leaves fewer than
# ~4 significant digits.
DYNAMIC_RANGE_LIMIT = 1e12


@dataclass(frozen=True)
class SeriesPolicy:
    """Stopping rule for :func:`sum_series`.

    Parameters
    ----------
    tol : float
        Stop once ``|T_n / S_n| < tol`` for some ``n >= min_terms``.
    cap : int
        Largest index evaluated.
    min_terms : int
        Smallest index at which the tolerance test may stop the sum.  Guards
        against accidental zero terms early in alternating inner sums.
    consecutive : int
        Number of successive terms that must pass the tolerance test.  Values
        above 1 protect series whose terms carry oscillating factors (e.g.
        Laguerre polynomials) from stopping on a term that happens to sit
        near a root.
    """

    tol: float = 1e-10
    cap: int = 150
    min_terms: int = 3
    consecutive: int = 1

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if self.cap < self.min_terms or self.min_terms < 0:
            raise ParameterError(
                f"need 0 <= min_terms <= cap, got min_terms={self.min_terms}, cap={self.cap}"
            )
        if self.consecutive < 1:
            raise ParameterError(f"consecutive must be >= 1, got {self.consecutive}")


@dataclass(frozen=True)
class SeriesResult:
    """Value of a truncated series together with its diagnostics.

    ``terms_used`` is the last index ``n`` that was added.  ``unstable`` is set
    when the largest term exceeds the final sum by more than
    :data:`DYNAMIC_RANGE_LIMIT`, meaning cancellation has eaten most of the
    significant digits.  ``minimum`` is an optional diagnostic used by callers
    that clamp the value (e.g. a density that dips slightly below zero).
    """

    value: float
    terms_used: int
    converged: bool
    max_term_magnitude: float
    unstable: bool = False
    minimum: float | None = None

    @property
    def ok(self) -> bool:
        return self.converged and not self.unstable

    def flags(self) -> list[str]:
        out = []
        if not self.converged:
            out.append("nonconverged")
        if self.unstable:
            out.append("unstable")
        return out

    def __float__(self):
        return float(self.value)


TermSource = Union[Iterable[float], Callable[[int], float]]


def _iterate(source: TermSource) -> Iterator[float]:
    if callable(source):
        n = 0
        while True:
            yield source(n)
            n += 1
    else:
        yield from source


def sum_series(terms: TermSource, policy: SeriesPolicy | None = None) -> SeriesResult:
    """Sum ``T_0 + T_1 + ...`` under a :class:`SeriesPolicy`.

    Parameters
    ----------
    terms : iterable of float or callable
        Either an iterable yielding ``T_0, T_1, ...`` or a function ``n -> T_n``.
        A finite iterable ends the sum early; the result is then marked
        converged since no terms were dropped.
    policy : SeriesPolicy, optional
        Tolerance, cap and minimum index; defaults to ``SeriesPolicy()``.

    Returns
    -------
    SeriesResult

    Raises
    ------
    NumericOverflow
        If a term or the partial sum becomes non-finite.

    Examples
    --------
    >>> r = sum_series(lambda n: 0.5 ** n, SeriesPolicy(tol=1e-10))
    >>> round(r.value, 12), r.converged
    (2.0, True)
    """
    policy = policy or SeriesPolicy()
    total = 0.0
    max_term = 0.0
    converged = False
    n = -1
    streak = 0
    exhausted = True
    for n, term in enumerate(_iterate(terms)):
        term = float(term)
        new_total = total + term
        if not (math.isfinite(term) and math.isfinite(new_total)):
            raise NumericOverflow(
                f"series partial sum became non-finite at index {n}", max(n - 1, 0)
            )
        total = new_total
        max_term = max(max_term, abs(term))
        if n >= policy.min_terms:
            if total == 0.0:
                small = term == 0.0
            else:
                small = abs(term / total) < policy.tol
            streak = streak + 1 if small else 0
            converged = streak >= policy.consecutive
        if converged or n >= policy.cap:
            exhausted = False
            break
    if exhausted:
        converged = True
    n = max(n, 0)
    unstable = max_term > DYNAMIC_RANGE_LIMIT * abs(total) if max_term > 0 else False
    return SeriesResult(total, n, converged, max_term, unstable)
