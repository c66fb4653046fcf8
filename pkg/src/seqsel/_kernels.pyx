# cython: language_level=3
"""Compiled inner loops. Mirrors :mod:`seqsel._kernels_py` function by function."""

from libc.math cimport cos, sin, exp, log, log1p, lgamma, fabs, INFINITY, NAN

import numpy as np

cdef int MAX_ITER = 100000
cdef double EPS = 1e-16
cdef double FPMIN = 1e-300
cdef Py_ssize_t RESYNC = 4096


cdef double _log_gammainc_lower(double s, double x) nogil:
    cdef double term, total, ap, b, c, d, h, an, delta, log_q
    cdef int i
    if x == 0.0:
        return -INFINITY
    if x == INFINITY:
        return 0.0
    if x < s + 1.0:
        ap = s
        term = 1.0 / s
        total = term
        for i in range(MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if fabs(term) < fabs(total) * EPS:
                return s * log(x) - x - lgamma(s) + log(total)
        return NAN
    # modified Lentz continued fraction for the upper tail
    b = x + 1.0 - s
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if fabs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < EPS:
            log_q = s * log(x) - x - lgamma(s) + log(h)
            return log1p(-exp(log_q))
    return NAN


def log_gammainc_lower(double s, double[::1] x):
    """Log of the regularized lower incomplete gamma P(s, x), elementwise."""
    cdef Py_ssize_t i, m = x.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            o[i] = _log_gammainc_lower(s, x[i])
    return out


def nonlinear_phase(double complex[:, ::1] field, double coeff):
    """In place: field *= exp(1j * coeff * sum_pol |field|**2)."""
    cdef Py_ssize_t npol = field.shape[0], m = field.shape[1]
    cdef Py_ssize_t i, p
    cdef double power, phi, cr, ci, re, im
    with nogil:
        for i in range(m):
            power = 0.0
            for p in range(npol):
                re = field[p, i].real
                im = field[p, i].imag
                power += re * re + im * im
            phi = coeff * power
            cr = cos(phi)
            ci = sin(phi)
            for p in range(npol):
                re = field[p, i].real
                im = field[p, i].imag
                field[p, i] = (re * cr - im * ci) + 1j * (re * ci + im * cr)


def window_energy(double complex[:, ::1] d, Py_ssize_t n):
    """Sliding sums of sum_pol |d|**2 over all windows of length n."""
    cdef Py_ssize_t npol = d.shape[0], m = d.shape[1]
    cdef Py_ssize_t i, p, k
    cdef double acc, v
    if n < 1 or n > m:
        raise ValueError("window length must lie in [1, len]")
    out = np.empty(m - n + 1, dtype=np.float64)
    cdef double[::1] o = out
    e = np.empty(m, dtype=np.float64)
    cdef double[::1] en = e
    with nogil:
        for i in range(m):
            v = 0.0
            for p in range(npol):
                v += d[p, i].real * d[p, i].real + d[p, i].imag * d[p, i].imag
            en[i] = v
        acc = 0.0
        for i in range(n):
            acc += en[i]
        o[0] = acc
        for i in range(1, m - n + 1):
            if i % RESYNC == 0:
                acc = 0.0
                for k in range(i, i + n):
                    acc += en[k]
            else:
                acc += en[i + n - 1] - en[i - 1]
                if acc < 0.0:
                    acc = 0.0
            o[i] = acc
    return out
