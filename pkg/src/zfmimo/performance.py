"""Average symbol error probability (M-PSK) and ergodic capacity.

Every AEP here is an average of the conditional M-PSK error probability

.. math::

    P_e(\\gamma) = \\frac{1}{\\pi} \\int_0^{(M-1)\\pi/M}
        \\exp\\left(-\\frac{\\gamma \\sin^2(\\pi/M)}{\\sin^2\\theta}\\right) d\\theta

over the SNR law, i.e. a finite-range integral of the SNR m.g.f.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from . import kernels
from .channel import DerivedParams, FadingCase
from .distribution import GammaMixture, rayleigh_rician_law, virtual_central_approx
from .errors import (
    CancellationWarning,
    DomainError,
    ParameterError,
    QuadratureError,
)
from .series import DYNAMIC_RANGE_LIMIT, SeriesPolicy, SeriesResult, sum_series
from .special import capacity_kernel_cq, hyp1f1_closed, mpsk_mgf_integral

__all__ = [
    "AepMethod",
    "AepResult",
    "aep_exact_hyp",
    "aep_exact_closed",
    "aep_exact_series",
    "aep_rayleigh",
    "aep_approx",
    "ergodic_capacity",
    "LOW_SNR_THRESHOLD_DB",
]

#: Per-bit SNR (dB) below which the closed-form AEP is flagged for NT >= 2.
LOW_SNR_THRESHOLD_DB = 10.0
_CLOSED_FORM_Z = 30.0

_LN2 = math.log(2.0)


class AepMethod(str, enum.Enum):
    ExactHypergeometric = "ExactHypergeometric"
    ExactClosedForm = "ExactClosedForm"
    ExactSeries = "ExactSeries"
    RayleighExact = "RayleighExact"
    Approximate = "Approximate"


@dataclass(frozen=True)
class AepResult:
    """An AEP value with the method that produced it.

    ``flags`` collects reliability warnings such as ``"LowSnrUnreliable"``,
    ``"nonconverged"`` or ``"unstable"``.
    """

    value: float
    method: AepMethod
    diagnostics: Optional[SeriesResult] = None
    flags: tuple = field(default_factory=tuple)

    def __float__(self):
        return float(self.value)


def _check_M(M):
    if int(M) != M or M < 2:
        raise ParameterError(f"M must be an integer >= 2, got {M}")
    return int(M)


def _theta_quad(f, M, epsabs, epsrel):
    upper = (M - 1) * math.pi / M
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        warnings.simplefilter("ignore", CancellationWarning)
        try:
            val, err = integrate.quad(f, 0.0, upper, epsabs=epsabs, epsrel=epsrel, limit=500)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"theta quadrature did not converge: {exc}") from None
    return val / math.pi


def _clip(value, M):
    return min(max(value, 0.0), (M - 1) / M)


def aep_exact_hyp(params: DerivedParams, M: int = 4, epsabs: float = 0.0,
                  epsrel: float = 1e-10) -> AepResult:
    """Exact AEP by quadrature of the 1F1-weighted M-PSK integrand.

    The 1F1 argument lies in ``[-a, 0]``; it is summed in its Kummer form,
    whose terms are all positive, or, once its magnitude exceeds 30, taken
    from the finite closed form, which is cancellation-free there.  The default tolerance is relative, which
    also implies an absolute error below ``1e-10`` since the AEP is below 1,
    and keeps full accuracy deep in the high-SNR tail.

    Raises
    ------
    QuadratureError
        If the adaptive quadrature does not reach the tolerance.
    """
    M = _check_M(M)
    N, NR, a, g1 = params.n_div, params.nr, params.a_param, params.gamma1
    c = g1 * math.sin(math.pi / M) ** 2
    aNR = float(NR - N)

    def f(theta):
        s2 = math.sin(theta) ** 2
        den = s2 + c
        u = s2 / den
        if u == 0.0:
            return 0.0
        z = a * c / den
        if z > _CLOSED_FORM_Z and N < NR:
            # large argument: the finite form is dominated by its z^-N terms
            return u ** N * hyp1f1_closed(N, NR, -z)
        # 1F1(N; NR; -z) = exp(-z) 1F1(NR-N; NR; z)
        hyp, _, conv, _ = kernels.confluent_series(aNR, float(NR), z, 1e-16, 100000, 0)
        return u ** N * math.exp(-z) * hyp

    val = _theta_quad(f, M, epsabs, epsrel)
    return AepResult(_clip(val, M), AepMethod.ExactHypergeometric)


def aep_exact_closed(params: DerivedParams, M: int = 4,
                     low_snr_threshold_db: float = LOW_SNR_THRESHOLD_DB,
                     epsabs: float = 0.0, epsrel: float = 1e-10) -> AepResult:
    """Exact AEP with the 1F1 replaced by elementary functions.

    For ``NT = 1`` the 1F1 is an exponential.  For ``NT >= 2`` the finite
    closed form is used; it cancels badly when its argument is small, which
    happens at low SNR, so results for ``NT >= 2`` below
    ``low_snr_threshold_db`` (per-bit SNR) carry the ``LowSnrUnreliable`` flag.

    Raises
    ------
    DomainError
        For ``NT >= 2`` with ``a = 0`` (the closed form needs a nonzero argument).
    """
    M = _check_M(M)
    N, NR, a, g1 = params.n_div, params.nr, params.a_param, params.gamma1
    nt = NR - N + 1
    c = g1 * math.sin(math.pi / M) ** 2
    flags = []
    if nt >= 2:
        if a == 0:
            raise DomainError("closed-form AEP for NT >= 2 requires a > 0")
        gamma_b_db = 10.0 * math.log10(params.gamma_s / math.log2(M))
        if gamma_b_db < low_snr_threshold_db:
            flags.append("LowSnrUnreliable")

    def f(theta):
        s2 = math.sin(theta) ** 2
        den = s2 + c
        u = s2 / den
        if u == 0.0:
            return 0.0
        sigma = -a * c / den
        if nt == 1:
            return u ** N * math.exp(sigma)
        return u ** N * hyp1f1_closed(N, NR, sigma)

    val = _theta_quad(f, M, epsabs, epsrel)
    return AepResult(_clip(val, M), AepMethod.ExactClosedForm, flags=tuple(flags))


def _mpsk_moments(N, c, M, nmax):
    """``J_n = (1/pi) int u^N (1-u)^n dtheta`` for n = 0..nmax, u = s^2/(s^2+c)."""
    upper = (M - 1) * math.pi / M
    n = np.arange(nmax + 1)

    def f(theta):
        s2 = math.sin(theta) ** 2
        den = s2 + c
        return (s2 / den) ** N * (c / den) ** n

    val, _ = integrate.quad_vec(f, 0.0, upper, epsabs=0.0, epsrel=1e-13, norm="max",
                                limit=2000)
    return np.asarray(val) / math.pi


def aep_exact_series(params: DerivedParams, M: int = 4, tol: float = 1e-10,
                     cap: int = 150, inner: str = "moments") -> AepResult:
    """Exact AEP as a gamma-mixture series of M-PSK kernel integrals.

    Parameters
    ----------
    inner : {"moments", "binomial"}
        How each mixture term's inner alternating sum is evaluated.
        ``"binomial"`` sums ``C(n, m) (-1)^m P(N+n-m)`` with the closed-form
        kernel ``P``; it loses all accuracy once ``n`` reaches a few tens.
        ``"moments"`` (default) uses the equivalent single integral
        ``(-1)^n (1/pi) int u^N (1-u)^n dtheta``, which has no cancellation.

    Notes
    -----
    The outer series itself alternates; for large ``a`` its terms grow far
    beyond the sum and the result is flagged ``unstable``.
    """
    M = _check_M(M)
    if inner not in ("moments", "binomial"):
        raise ParameterError("inner must be 'moments' or 'binomial'")
    N, g1 = params.n_div, params.gamma1
    policy = SeriesPolicy(tol=tol, cap=cap)
    A = GammaMixture.from_params(params).coefficients(cap)
    if params.a_param == 0:
        v = mpsk_mgf_integral(N, g1, M)
        return AepResult(v, AepMethod.ExactSeries, SeriesResult(v, 0, True, v))
    if inner == "moments":
        c = g1 * math.sin(math.pi / M) ** 2
        J = _mpsk_moments(N, c, M, cap)
        terms = (A[n] * (-1) ** n * J[n] for n in range(cap + 1))
    else:
        P = [mpsk_mgf_integral(k, g1, M) for k in range(N, N + cap + 1)]

        def terms():
            for n in range(cap + 1):
                inner_sum = math.fsum(math.comb(n, m) * (-1) ** m * P[n - m]
                                      for m in range(n + 1))
                yield A[n] * inner_sum

        terms = terms()
    r = sum_series(terms, policy)
    if not -1e-9 <= r.value <= (M - 1) / M + 1e-9:
        # a probability outside its range means cancellation destroyed the sum
        r = SeriesResult(r.value, r.terms_used, r.converged, r.max_term_magnitude, True)
    return AepResult(_clip(r.value, M), AepMethod.ExactSeries, r, tuple(r.flags()))


def aep_rayleigh(params: DerivedParams, M: int = 4, mu_tol: float = 1e-10) -> AepResult:
    """AEP when the analyzed stream is Rayleigh faded: ``Gamma(N, gamma1)`` law.

    Covers Rayleigh-Rayleigh fading and Rayleigh-Rician fading whose
    interferers are uncorrelated with the analyzed stream.

    Raises
    ------
    ExactLawUnavailable
        If the analyzed stream's conditional mean exceeds ``mu_tol`` in norm.
    """
    M = _check_M(M)
    if params.fading_case is FadingCase.RicianRayleigh and params.a_param > 0:
        raise ParameterError("analyzed stream is Rician; use aep_exact_hyp")
    N, g1 = rayleigh_rician_law(params, mu_tol=mu_tol)
    return AepResult(mpsk_mgf_integral(N, g1, M), AepMethod.RayleighExact)


def aep_approx(params: DerivedParams, M: int = 4, h_d=None) -> AepResult:
    """AEP under the central-Wishart approximation of the channel Gram matrix."""
    M = _check_M(M)
    va = virtual_central_approx(params, h_d)
    return AepResult(mpsk_mgf_integral(params.n_div, va.gamma1_hat, M),
                     AepMethod.Approximate)


def _capacity_tail_integrals(N, gamma1, nmax):
    """``I_n = int_0^inf (y / (y + 1/gamma1))^n y^(N-1) exp(-y) dy``, n = 0..nmax."""
    x = 1.0 / gamma1
    n = np.arange(nmax + 1)

    def f(y):
        return (y / (y + x)) ** n * (y ** (N - 1) * math.exp(-y))

    val, _ = integrate.quad_vec(f, 0.0, math.inf, epsabs=0.0, epsrel=1e-13, norm="max",
                                limit=2000)
    return np.asarray(val)


def capacity_differences(N: int, gamma1: float, nmax: int, method: str = "integral"):
    """Inner sums ``B_0 .. B_nmax`` of the capacity series.

    ``B_n`` is the ``n``-th backward difference (in ``Q``) of the capacity
    kernel ``C_Q(gamma1)``, ending at ``Q = n + N - 1``.

    Parameters
    ----------
    method : {"integral", "closed"}
        ``"closed"`` forms the alternating binomial combination of
        closed-form ``C_Q`` values and also returns the largest combined
        magnitude for each ``n``.  ``"integral"`` uses the exact identity
        ``B_n = (-1)^(n-1) (n-1)! / (N+n-1)! * I_n`` for ``n >= 1``, with a
        positive integral ``I_n``, and has no cancellation.

    Returns
    -------
    B : ndarray
    scale : ndarray
        Largest single contribution to each ``B_n`` (equal to ``|B_n|`` for
        the integral method).
    """
    if method == "integral":
        B = np.empty(nmax + 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CancellationWarning)
            B[0] = capacity_kernel_cq(N - 1, gamma1)
        if nmax >= 1:
            I = _capacity_tail_integrals(N, gamma1, nmax)
            for n in range(1, nmax + 1):
                lr = math.lgamma(n) - math.lgamma(N + n)
                B[n] = (-1) ** (n - 1) * math.exp(lr) * I[n]
        return B, np.abs(B)
    if method != "closed":
        raise ParameterError("method must be 'integral' or 'closed'")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CancellationWarning)
        CQ = [capacity_kernel_cq(Q, gamma1) for Q in range(nmax + N)]
    B = np.empty(nmax + 1)
    scale = np.empty(nmax + 1)
    for n in range(nmax + 1):
        parts = [math.comb(n, n + N - 1 - Q) * (-1) ** (n + N - 1 - Q) * CQ[Q]
                 for Q in range(N - 1, n + N)]
        B[n] = math.fsum(parts)
        scale[n] = max(abs(p) for p in parts)
    return B, scale


def ergodic_capacity(params: DerivedParams, tol: float = 1e-5, cap: int = 150,
                     method: str = "integral") -> SeriesResult:
    """Ergodic capacity ``E[log2(1 + gamma)]`` in bit/s/Hz as a mixture series.

    Parameters
    ----------
    tol, cap : series stopping rule.
    method : {"integral", "closed"}
        Evaluation of the inner sums; see :func:`capacity_differences`.

    Returns
    -------
    SeriesResult
        ``unstable`` is set when any term, or any contribution to an inner
        sum, exceeds the final value by more than 1e12; ``converged`` is
        false when the cap is hit first.
    """
    N, g1 = params.n_div, params.gamma1
    if not g1 > 0:
        raise DomainError("gamma1 must be positive")
    A = GammaMixture.from_params(params).coefficients(cap)
    if params.a_param == 0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CancellationWarning)
            v = capacity_kernel_cq(N - 1, g1) / _LN2
        return SeriesResult(v, 0, True, v)
    B, scale = capacity_differences(N, g1, cap, method)
    r = sum_series((A[n] * B[n] / _LN2 for n in range(cap + 1)), SeriesPolicy(tol=tol, cap=cap))
    used = r.terms_used
    biggest = max(r.max_term_magnitude, float(np.max(A[:used + 1] * scale[:used + 1])) / _LN2)
    unstable = r.unstable or biggest > DYNAMIC_RANGE_LIMIT * abs(r.value)
    # Jensen: 0 <= E log2(1+g) <= log2(1 + E g); anything outside is garbage
    upper = math.log2(1.0 + N * g1 * (1.0 + params.a_param / params.nr))
    if not 0.0 <= r.value <= upper * (1.0 + 1e-9):
        unstable = True
    return SeriesResult(r.value, used, r.converged, biggest, unstable)
