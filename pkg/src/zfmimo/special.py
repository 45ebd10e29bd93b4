"""Scalar special functions used by the analytic formulas.

All functions take real, scalar arguments.  Integer shape parameters are
assumed throughout (the SNR law only involves integer gamma shapes).
"""

from __future__ import annotations

import math
import warnings

from scipy import integrate as _integrate
from scipy import special as _sp

from . import kernels
from .errors import CancellationWarning, DomainError, ParameterError
from .series import DYNAMIC_RANGE_LIMIT, SeriesPolicy, SeriesResult

__all__ = [
    "pochhammer",
    "log_pochhammer",
    "hyp1f1_series",
    "hyp1f1_closed",
    "reg_lower_inc_gamma",
    "exp_integral_e1",
    "scaled_exp_e1",
    "capacity_kernel_cq",
    "mpsk_mgf_integral",
]


def log_pochhammer(x: float, n: int) -> float:
    """``log((x)_n)`` for ``x > 0``."""
    if x <= 0:
        raise DomainError("log_pochhammer needs x > 0")
    return math.lgamma(x + n) - math.lgamma(x)


def pochhammer(x: float, n: int) -> float:
    """Rising factorial ``x (x+1) ... (x+n-1)``, with ``(x)_0 = 1``.

    Falls back to log-gamma accumulation once the direct product leaves the
    double range.
    """
    if n < 0 or int(n) != n:
        raise DomainError(f"pochhammer needs a nonnegative integer n, got {n}")
    result = 1.0
    for k in range(int(n)):
        result *= x + k
        if not math.isfinite(result):
            break
    else:
        return result
    if x > 0:
        try:
            return math.exp(log_pochhammer(x, n))
        except OverflowError:
            return math.inf
    return result


def _check_shapes(N, NR):
    if int(N) != N or int(NR) != NR or N < 1 or NR < 1:
        raise ParameterError(f"N and NR must be positive integers, got N={N}, NR={NR}")
    if N > NR:
        raise ParameterError(f"need N <= NR, got N={N}, NR={NR}")


def hyp1f1_series(N: int, NR: int, sigma: float, tol: float = 1e-10,
                  cap: int = 150) -> SeriesResult:
    """Confluent hypergeometric function 1F1(N; NR; sigma) by its power series.

    Terms follow the ratio recursion
    ``A_{n+1} = A_n * sigma (N+n) / ((NR+n)(n+1))``.  For ``sigma < 0`` the
    alternating series is replaced by the Kummer-transformed one,
    ``exp(sigma) 1F1(NR-N; NR; -sigma)``, whose terms are all positive; the
    direct alternating sum would lose every significant digit once
    ``|sigma|`` reaches a few tens.
    """
    _check_shapes(N, NR)
    if not tol > 0:
        raise ParameterError("tol must be positive")
    if sigma >= 0:
        value, n, conv, mx = kernels.confluent_series(float(N), float(NR), float(sigma),
                                                      tol, int(cap), 0)
        return SeriesResult(value, n, conv, mx)
    value, n, conv, mx = kernels.confluent_series(float(NR - N), float(NR), -float(sigma),
                                                  tol, int(cap), 0)
    scale = math.exp(sigma)
    if math.isfinite(value) and scale > 0.0:
        return SeriesResult(value * scale, n, conv, mx * scale)
    return _kummer_log_series(N, NR, -float(sigma), tol, int(cap))


def _kummer_log_series(N, NR, z, tol, cap):
    # exp(-z) 1F1(NR-N; NR; z) with each term carried in log form, for z so
    # large that exp(-z) underflows and the unscaled sum overflows
    b = NR - N
    if b == 0:
        return SeriesResult(math.exp(-z), 0, True, math.exp(-z))
    lz = math.log(z)
    base = math.lgamma(NR) - math.lgamma(b) - z
    total = 0.0
    biggest = 0.0
    for n in range(cap + 1):
        lt = base + n * lz + math.lgamma(b + n) - math.lgamma(NR + n) - math.lgamma(n + 1)
        t = math.exp(lt)
        total += t
        biggest = max(biggest, t)
        if n > z and t < tol * total:
            return SeriesResult(total, n, True, biggest)
    return SeriesResult(total, cap, False, biggest)


def hyp1f1_closed(N: int, NR: int, sigma: float) -> float:
    """Finite closed form of 1F1(N; NR; sigma) for integer ``1 <= N < NR``.

    Two finite sums: negative powers of ``sigma`` plus ``exp(sigma)`` times
    negative powers of ``sigma``.  Loses accuracy for small ``|sigma|``, where
    the two parts cancel; a :class:`CancellationWarning` is emitted when the
    largest part exceeds the result by more than 1e12.

    Raises
    ------
    DomainError
        For ``sigma == 0`` or ``N == NR`` (use ``exp(sigma)`` there).
    """
    _check_shapes(N, NR)
    if sigma == 0:
        raise DomainError("closed-form 1F1 requires sigma != 0")
    if NR - N - 1 < 0:
        raise DomainError("closed-form 1F1 requires N < NR; use exp(sigma) for N == NR")
    m = NR - N - 1
    c1 = (-1) ** N * math.factorial(NR - 1) / math.factorial(m)
    parts = []
    for k in range(m + 1):
        parts.append(c1 * math.comb(m, k) * pochhammer(N, k) * sigma ** (-N - k))
    c2 = math.factorial(NR - 1) / math.factorial(N - 1) * math.exp(sigma)
    for k in range(N):
        parts.append(c2 * math.comb(N - 1, k) * pochhammer(NR - N, k)
                     * (-1) ** k * sigma ** (-(NR - N) - k))
    value = math.fsum(parts)
    biggest = max(abs(p) for p in parts)
    if biggest > DYNAMIC_RANGE_LIMIT * abs(value):
        warnings.warn(f"1F1({N};{NR};{sigma:g}) closed form lost precision "
                      f"(max part / result = {biggest / abs(value) if value else math.inf:.3g})",
                      CancellationWarning, stacklevel=2)
    return value


def reg_lower_inc_gamma(kappa: int, x: float) -> float:
    """Regularized lower incomplete gamma ``gamma(kappa, x) / (kappa-1)!``."""
    if x < 0:
        raise DomainError(f"reg_lower_inc_gamma needs x >= 0, got {x}")
    if kappa < 1:
        raise DomainError(f"kappa must be a positive integer, got {kappa}")
    return float(_sp.gammainc(kappa, x))


def exp_integral_e1(x: float) -> float:
    """Exponential integral ``E1(x) = int_x^inf exp(-t)/t dt`` for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"E1 needs x > 0, got {x}")
    return float(_sp.exp1(x))


def scaled_exp_e1(x: float) -> float:
    """``exp(x) E1(x)`` without overflow for large ``x``."""
    if not x > 0:
        raise DomainError(f"E1 needs x > 0, got {x}")
    if x < 50.0:
        return math.exp(x) * float(_sp.exp1(x))
    # modified Lentz on the continued fraction 1/(x+1- 1/(x+3- 4/(x+5- ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 200):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def capacity_kernel_cq(Q: int, gamma1: float) -> float:
    """``(1/Q!) int_0^inf ln(1 + gamma1 y) y^Q exp(-y) dy`` in closed form.

    Uses ``exp(1/gamma1) E1(1/gamma1)`` plus a double finite sum in powers of
    ``-1/gamma1``.  The sum alternates; a :class:`CancellationWarning` flags
    results whose largest term exceeds the value by more than 1e12 (small
    ``gamma1`` combined with large ``Q``).
    """
    if not gamma1 > 0:
        raise DomainError(f"gamma1 must be positive, got {gamma1}")
    if Q < 0 or int(Q) != Q:
        raise DomainError(f"Q must be a nonnegative integer, got {Q}")
    x = 1.0 / gamma1
    lx = math.log(x)
    e = scaled_exp_e1(x)
    parts = [e]
    for q1 in range(1, int(Q) + 1):
        lf = math.lgamma(q1 + 1)
        parts.append((-1) ** q1 * math.exp(q1 * lx - lf) * e)
        for q2 in range(q1):
            parts.append((-1) ** q2 * math.exp(q2 * lx + math.lgamma(q1 - q2) - lf))
    value = math.fsum(parts)
    biggest = max(abs(p) for p in parts)
    if value <= 0 or biggest > DYNAMIC_RANGE_LIMIT * value:
        warnings.warn(f"C_{Q}({gamma1:g}) closed form lost precision",
                      CancellationWarning, stacklevel=2)
    return value


def mpsk_mgf_integral(N: int, gamma1: float, M: int) -> float:
    """``(1/pi) int_0^{(M-1)pi/M} (sin^2 t / (sin^2 t + gamma1 sin^2(pi/M)))^N dt``.

    This is the M-PSK symbol error probability under ``Gamma(N, gamma1)``
    SNR, evaluated in closed form.  The result lies in ``(0, (M-1)/M]``.

    The closed form is a difference of O(1) quantities, so it loses relative
    accuracy once the result is small.  Below ``1e-6 (M-1)/M`` the value is
    recomputed by adaptive quadrature to 1e-12 relative accuracy.
    """
    if N < 1 or int(N) != N:
        raise DomainError(f"N must be a positive integer, got {N}")
    if gamma1 < 0:
        raise DomainError(f"gamma1 must be nonnegative, got {gamma1}")
    if M < 2 or int(M) != M:
        raise DomainError(f"M must be an integer >= 2, got {M}")
    if gamma1 == 0:
        return (M - 1) / M
    value = kernels.mpsk_closed(int(N), float(gamma1), int(M))
    if value < 1e-6 * (M - 1) / M:
        value = _mpsk_quadrature(int(N), float(gamma1), int(M))
    return value


def _mpsk_quadrature(N, gamma1, M):
    c = gamma1 * math.sin(math.pi / M) ** 2

    def f(t):
        s2 = math.sin(t) ** 2
        return (s2 / (s2 + c)) ** N

    upper = (M - 1) * math.pi / M
    # the integrand peaks at pi/2; split there so the peak is an endpoint
    pieces = [(0.0, min(math.pi / 2, upper))]
    if upper > math.pi / 2:
        pieces.append((math.pi / 2, upper))
    total = 0.0
    for lo, hi in pieces:
        total += _integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return total / math.pi


def default_policy(tol: float = 1e-10, cap: int = 150) -> SeriesPolicy:
    return SeriesPolicy(tol=tol, cap=cap)
