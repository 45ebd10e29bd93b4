"""Pure-Python/NumPy versions of the compiled kernels in ``_kernels.pyx``."""

import math

import numpy as np


def confluent_series(a, b, z, tol, cap, min_terms):
    term = 1.0
    total = 1.0
    max_term = 1.0
    n = 0
    converged = False
    while n < cap:
        term *= z * (a + n) / ((b + n) * (n + 1))
        n += 1
        total += term
        if not math.isfinite(total):
            return total, n, False, max_term
        max_term = max(max_term, abs(term))
        if n >= min_terms:
            if total == 0.0:
                if term == 0.0:
                    converged = True
                    break
            elif abs(term / total) < tol:
                converged = True
                break
    return total, n, converged, max_term


def conditional_error(gammas, g, w, chunk=16384):
    gammas = np.ascontiguousarray(gammas, dtype=np.float64)
    out = np.empty(gammas.shape[0])
    for lo in range(0, gammas.shape[0], chunk):
        block = gammas[lo:lo + chunk]
        out[lo:lo + chunk] = np.exp(-np.outer(block, g)) @ w
    return out


def laguerre_sequence(nmax, alpha, x):
    L = np.empty(nmax + 1)
    L[0] = 1.0
    if nmax >= 1:
        L[1] = 1.0 + alpha - x
    for k in range(1, nmax):
        L[k + 1] = ((2 * k + 1 + alpha - x) * L[k] - (k + alpha) * L[k - 1]) / (k + 1)
    return L


def mpsk_closed(N, gamma1, M):
    s2 = math.sin(math.pi / M) ** 2
    c = gamma1 * s2
    b = math.sqrt(c / (c + 1.0))
    phi = math.atan(b / math.tan(math.pi / M))
    cphi = math.cos(phi)
    sphi = math.sin(phi)
    one_b2 = 1.0 - b * b
    r = 1.0
    pw = 1.0
    inner = 0.0
    cpow = cphi
    total = 0.0
    for n in range(N):
        if n > 0:
            inner += cpow / (r * (2 * n - 1))
            cpow *= cphi * cphi
            r *= (2.0 * n - 1.0) / (2.0 * n)
            pw *= one_b2
        total += r * pw * (math.pi / 2 + phi + sphi * inner)
    return (M - 1.0) / M - b / math.pi * total
