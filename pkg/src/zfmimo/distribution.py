"""Law of the ZF output SNR of the analyzed stream.

Under Rician-Rayleigh fading the SNR is an infinite mixture of gamma laws with
common scale ``gamma1``:

.. math::

    p(t) = \\sum_n A_n(a) \\sum_{m=0}^{n} \\binom{n}{m} (-1)^m f_{N+n-m}(t),
    \\qquad A_n(a) = \\frac{(N)_n}{(N_R)_n} \\frac{a^n}{n!},

where ``f_k`` is the Gamma(k, gamma1) density.  The inner alternating sums
are evaluated through the identity

.. math::

    \\sum_{m=0}^{n} \\binom{n}{m} (-1)^m f_{N+n-m}(t)
      = (-1)^n \\frac{n!}{(n+N-1)!} L_n^{(N-1)}(y) \\frac{y^{N-1} e^{-y}}{\\gamma_1},
    \\qquad y = t / \\gamma_1,

which is exact and avoids the binomial cancellation.  The same trick gives
the CDF with ``L_{n-1}^{(N)}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .channel import DerivedParams, FadingCase
from .errors import DomainError, ExactLawUnavailable, ParameterError
from .series import SeriesPolicy, SeriesResult, sum_series
from .special import hyp1f1_closed, hyp1f1_series, reg_lower_inc_gamma

__all__ = [
    "GammaMixture",
    "VirtualApprox",
    "MGF_METHODS",
    "snr_mgf",
    "snr_pdf",
    "snr_outage",
    "snr_moment",
    "amount_of_fading",
    "rayleigh_rician_law",
    "virtual_central_approx",
    "diversity_order_estimate",
]

MGF_METHODS = ("Hypergeometric", "ClosedForm", "Series")


@dataclass(frozen=True)
class GammaMixture:
    """Coefficient structure of the gamma-mixture SNR law."""

    n_div: int
    gamma1: float
    a_param: float
    nr: int

    @classmethod
    def from_params(cls, params: DerivedParams) -> "GammaMixture":
        return cls(params.n_div, params.gamma1, params.a_param, params.nr)

    def coefficient(self, n: int) -> float:
        """``A_n(a) = (N)_n / (NR)_n * a^n / n!``."""
        return float(self.coefficients(n)[n])

    def coefficients(self, nmax: int) -> np.ndarray:
        """``A_0 .. A_nmax`` by the ratio recursion."""
        out = np.empty(nmax + 1)
        out[0] = 1.0
        N, NR, a = self.n_div, self.nr, self.a_param
        for n in range(nmax):
            out[n + 1] = out[n] * a * (N + n) / ((NR + n) * (n + 1))
        return out


@dataclass(frozen=True)
class VirtualApprox:
    """Central-Wishart approximation: ``Gamma(N, gamma1_hat)`` SNR law."""

    gamma1_hat: float
    rhat: np.ndarray


def _policy(tol, cap):
    return SeriesPolicy(tol=tol, cap=cap)


def _laguerre_policy(tol, cap):
    # Laguerre factors vanish at their roots, so a single tiny term says
    # nothing about the tail.
    return SeriesPolicy(tol=tol, cap=cap, consecutive=3)


def snr_mgf(params: DerivedParams, s: float, method: str = "Hypergeometric",
            tol: float = 1e-12) -> float:
    """Moment generating function ``E[exp(s * gamma)]`` for real ``s < 1/gamma1``.

    Parameters
    ----------
    params : DerivedParams
    s : float
    method : {"Hypergeometric", "ClosedForm", "Series"}
        ``Hypergeometric`` uses ``(1 - gamma1 s)^-N 1F1(N; NR; sigma)`` with
        ``sigma = a gamma1 s / (1 - gamma1 s)``; ``ClosedForm`` replaces the
        1F1 by its finite closed form; ``Series`` sums the gamma mixture.
    tol : float
        Relative tolerance of the series-based evaluations.
    """
    if method not in MGF_METHODS:
        raise ParameterError(f"method must be one of {MGF_METHODS}, got {method!r}")
    g1, N, NR, a = params.gamma1, params.n_div, params.nr, params.a_param
    x = 1.0 - g1 * s
    if not x > 0:
        raise DomainError(f"m.g.f. needs s < 1/gamma1 = {1 / g1:g}, got s={s}")
    base = x ** (-N)
    sigma = a * g1 * s / x
    if method == "Hypergeometric":
        r = hyp1f1_series(N, NR, sigma, tol=tol, cap=2000)
        return base * r.value
    if method == "ClosedForm":
        if N == NR:
            return base * math.exp(sigma)
        if sigma == 0:
            return base
        return base * hyp1f1_closed(N, NR, sigma)
    # gamma mixture: the inner binomial sum collapses to (g1 s / x)^n
    ratio = g1 * s / x

    def terms():
        A = 1.0
        p = 1.0
        n = 0
        while True:
            yield A * p
            A *= a * (N + n) / ((NR + n) * (n + 1))
            p *= ratio
            n += 1

    r = sum_series(terms(), _policy(tol, 2000))
    return base * r.value


def _log_gamma_kernel(N, y):
    """log of y^(N-1) e^-y, with y = 0 handled by the caller."""
    return (N - 1) * math.log(y) - y


def snr_pdf(params: DerivedParams, t: float, tol: float = 1e-10,
            cap: int = 150) -> SeriesResult:
    """Probability density of the SNR at ``t >= 0``.

    The value is clamped at zero; ``minimum`` in the returned
    :class:`SeriesResult` holds the raw (pre-clamp) value.
    """
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    N, NR, a, g1 = params.n_div, params.nr, params.a_param, params.gamma1
    y = t / g1
    if y == 0.0:
        if N >= 2:
            return SeriesResult(0.0, 0, True, 0.0, minimum=0.0)
        # t^0 factor: inner Laguerre values are 1
        pref = 1.0 / g1
    else:
        pref = math.exp(_log_gamma_kernel(N, y)) / g1
    if pref == 0.0:
        return SeriesResult(0.0, 0, True, 0.0, minimum=0.0)
    if a == 0.0:
        v = pref / math.factorial(N - 1)
        return SeriesResult(v, 0, True, v, minimum=v)
    lag = kernels.laguerre_sequence(cap, float(N - 1), y)

    def terms():
        c = 1.0 / math.factorial(N - 1)
        for n in range(cap + 1):
            yield (-1) ** n * c * lag[n] * pref
            c *= a / (NR + n)

    r = sum_series(terms(), _laguerre_policy(tol, cap))
    return SeriesResult(max(r.value, 0.0), r.terms_used, r.converged,
                        r.max_term_magnitude, r.unstable, minimum=r.value)


def snr_outage(params: DerivedParams, gamma_th: float, tol: float = 1e-10,
               cap: int = 150) -> SeriesResult:
    """Outage probability ``P(gamma < gamma_th)``, clamped to ``[0, 1]``.

    ``minimum`` in the result holds the raw value before clamping.
    """
    if gamma_th < 0:
        raise DomainError(f"gamma_th must be nonnegative, got {gamma_th}")
    N, NR, a, g1 = params.n_div, params.nr, params.a_param, params.gamma1
    y = gamma_th / g1
    if y == 0.0:
        return SeriesResult(0.0, 0, True, 0.0, minimum=0.0)
    if math.isinf(y):
        return SeriesResult(1.0, 0, True, 1.0, minimum=1.0)
    head = reg_lower_inc_gamma(N, y)
    if a == 0.0:
        return SeriesResult(head, 0, True, head, minimum=head)
    pref = math.exp(N * math.log(y) - y)
    lag = kernels.laguerre_sequence(cap, float(N), y)

    def terms():
        yield head
        # c_n = A_n n! / (n+N-1)!, term = (-1)^n c_n / n * pref * L_{n-1}^{(N)}
        c = a / (NR * math.factorial(N - 1))
        for n in range(1, cap + 1):
            yield (-1) ** n * c / n * pref * lag[n - 1]
            c *= a / (NR + n)

    r = sum_series(terms(), _laguerre_policy(tol, cap))
    v = min(max(r.value, 0.0), 1.0)
    return SeriesResult(v, r.terms_used, r.converged, r.max_term_magnitude,
                        r.unstable, minimum=r.value)


def snr_moment(params: DerivedParams, p: int, tol: float = 1e-10) -> SeriesResult:
    """``E[gamma^p]`` from the mixture representation.

    The inner alternating sum is the ``n``-th finite difference of the
    degree-``p`` polynomial ``(x)_p`` and vanishes for ``n > p``, so the sum is
    finite and evaluated exactly with integer arithmetic for the inner part.
    """
    if p < 0 or int(p) != p:
        raise DomainError(f"p must be a nonnegative integer, got {p}")
    p = int(p)
    N = params.n_div
    A = GammaMixture.from_params(params).coefficients(p)

    def inner(n):
        return sum(math.comb(n, m) * (-1) ** m * _rising_int(N + n - m, p)
                   for m in range(n + 1))

    terms = (float(A[n]) * inner(n) for n in range(p + 1))
    r = sum_series(terms, SeriesPolicy(tol=tol, cap=max(p, 3), min_terms=max(p, 3)))
    scale = params.gamma1 ** p
    return SeriesResult(r.value * scale, p, True, r.max_term_magnitude * scale, r.unstable)


def _rising_int(x: int, p: int) -> int:
    out = 1
    for k in range(p):
        out *= x + k
    return out


def amount_of_fading(params: DerivedParams) -> float:
    """Variance over squared mean of the SNR."""
    N, NR, a = params.n_div, params.nr, params.a_param
    return (1.0 - (N + 1) / (NR + 1) * a * a / (a + NR) ** 2) / N


def rayleigh_rician_law(params: DerivedParams, mu_tol: float = 1e-10):
    """Exact ``Gamma(N, gamma1)`` law for Rayleigh-Rician fading.

    Valid when the conditional mean of the analyzed stream vanishes, i.e. the
    analyzed stream is uncorrelated with the Rician interferers.

    Returns
    -------
    (int, float)
        Shape ``N`` and scale ``gamma1``.

    Raises
    ------
    ExactLawUnavailable
        If ``||mu|| > mu_tol``.
    """
    if params.fading_case is FadingCase.RicianRayleigh and params.a_param > 0:
        raise ParameterError("rayleigh_rician_law applies to Rayleigh-Rician or Rayleigh fading")
    mu_norm = 0.0 if params.mu is None else float(np.linalg.norm(params.mu))
    if mu_norm > mu_tol:
        raise ExactLawUnavailable(
            f"conditional mean of the analyzed stream is nonzero (||mu|| = {mu_norm:.3g}); "
            "the Rayleigh-Rician gamma law does not apply")
    return params.n_div, params.gamma1


def virtual_central_approx(params: DerivedParams, h_d=None) -> VirtualApprox:
    """Central-Wishart approximation with covariance ``R_TK + H_d^H H_d / NR``.

    With ``h_d`` omitted the parameters' own mean matrix is used.  For
    Rician-Rayleigh fading the analyzed-stream result then follows from a
    rank-one update, ``gamma1_hat = gamma1 (1 + a / NR)``, which keeps it a
    function of ``(N, gamma1, a)`` only.
    """
    NR = params.nr
    if h_d is None:
        if params.h_d is None:
            raise ParameterError("h_d is required for parameters without a mean matrix")
        h_d = params.h_d
        analytic = params.fading_case is FadingCase.RicianRayleigh
    else:
        analytic = False
    h_d = np.asarray(h_d, dtype=complex)
    rtk = np.asarray(params.rtk)
    rhat = rtk + h_d.conj().T @ h_d / NR
    if analytic:
        return VirtualApprox(params.gamma1 * (1.0 + params.a_param / NR), rhat)
    try:
        inv11 = float(np.real(np.linalg.inv(rhat)[0, 0]))
    except np.linalg.LinAlgError:
        raise ParameterError("virtual covariance is singular") from None
    if not inv11 > 0:
        raise ParameterError("virtual covariance is not positive definite")
    return VirtualApprox(params.gamma_s / inv11, rhat)


def diversity_order_estimate(aep_curve: Iterable[Sequence[float]], decade: float = 10.0) -> float:
    """High-SNR slope of an AEP curve.

    Least-squares slope of ``-log10(aep)`` against ``gamma_b_db / 10`` over
    points within ``decade`` dB of the largest ``gamma_b_db``.
    """
    pts = sorted((float(g), float(v)) for g, v in aep_curve)
    if not pts:
        raise ParameterError("empty curve")
    top = pts[-1][0]
    sel = [(g, v) for g, v in pts if g >= top - decade]
    if len(sel) < 2:
        raise ParameterError("need at least two points in the top decade")
    if any(v <= 0 for _, v in sel):
        raise ParameterError("AEP values must be positive")
    x = np.array([g / 10.0 for g, _ in sel])
    yv = -np.log10([v for _, v in sel])
    slope = np.polyfit(x, yv, 1)[0]
    return float(slope)
