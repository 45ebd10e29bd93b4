# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Must stay call-compatible with _kernels_py."""

import numpy as np

from libc.math cimport atan, cos, exp, fabs, isfinite, sin, sqrt, tan, M_PI


def confluent_series(double a, double b, double z, double tol, long cap, long min_terms):
    cdef double term = 1.0
    cdef double total = 1.0
    cdef double max_term = 1.0
    cdef long n = 0
    cdef bint converged = False
    while n < cap:
        term *= z * (a + n) / ((b + n) * (n + 1))
        n += 1
        total += term
        if not isfinite(total):
            return total, n, False, max_term
        if fabs(term) > max_term:
            max_term = fabs(term)
        if n >= min_terms:
            if total == 0.0:
                if term == 0.0:
                    converged = True
                    break
            elif fabs(term / total) < tol:
                converged = True
                break
    return total, n, converged, max_term


def conditional_error(double[::1] gammas, double[::1] g, double[::1] w):
    cdef Py_ssize_t n = gammas.shape[0]
    cdef Py_ssize_t m = g.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc, gam
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for i in range(n):
            gam = gammas[i]
            acc = 0.0
            for j in range(m):
                acc = acc + w[j] * exp(-gam * g[j])
            res[i] = acc
    return out


def laguerre_sequence(long nmax, double alpha, double x):
    out = np.empty(nmax + 1, dtype=np.float64)
    cdef double[::1] L = out
    cdef long k
    L[0] = 1.0
    if nmax >= 1:
        L[1] = 1.0 + alpha - x
    for k in range(1, nmax):
        L[k + 1] = ((2 * k + 1 + alpha - x) * L[k] - (k + alpha) * L[k - 1]) / (k + 1)
    return out


def mpsk_closed(long N, double gamma1, long M):
    cdef double s2 = sin(M_PI / M) ** 2
    cdef double c = gamma1 * s2
    cdef double b = sqrt(c / (c + 1.0))
    cdef double phi = atan(b / tan(M_PI / M))
    cdef double cphi = cos(phi)
    cdef double sphi = sin(phi)
    cdef double one_b2 = 1.0 - b * b
    # r_k = C(2k, k) / 4^k
    cdef double r = 1.0
    cdef double pw = 1.0
    cdef double inner = 0.0
    cdef double cpow = cphi
    cdef double total = 0.0
    cdef long n
    for n in range(N):
        if n > 0:
            inner += cpow / (r * (2 * n - 1))
            cpow *= cphi * cphi
            r *= (2.0 * n - 1.0) / (2.0 * n)
            pw *= one_b2
        total += r * pw * (M_PI / 2 + phi + sphi * inner)
    return (M - 1.0) / M - b / M_PI * total
