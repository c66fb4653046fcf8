"""Pure-Python/NumPy twins of the compiled kernels in ``_kernels.pyx``."""

import math

import numpy as np

MAX_ITER = 100000
EPS = 1e-16
FPMIN = 1e-300


def _log_gammainc_lower(s, x):
    if x == 0.0:
        return -math.inf
    if math.isinf(x):
        return 0.0
    if x < s + 1.0:
        ap = s
        term = 1.0 / s
        total = term
        for _ in range(MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * EPS:
                return s * math.log(x) - x - math.lgamma(s) + math.log(total)
        return math.nan
    b = x + 1.0 - s
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            log_q = s * math.log(x) - x - math.lgamma(s) + math.log(h)
            return math.log1p(-math.exp(log_q))
    return math.nan


def log_gammainc_lower(s, x):
    """Log of the regularized lower incomplete gamma P(s, x), elementwise."""
    return np.array([_log_gammainc_lower(s, float(v)) for v in x], dtype=np.float64)


def nonlinear_phase(field, coeff):
    """In place: field *= exp(1j * coeff * sum_pol |field|**2)."""
    power = (field.real**2 + field.imag**2).sum(axis=0)
    field *= np.exp(1j * coeff * power)


def window_energy(d, n):
    """Sliding sums of sum_pol |d|**2 over all windows of length n."""
    m = d.shape[1]
    if n < 1 or n > m:
        raise ValueError("window length must lie in [1, len]")
    e = (d.real**2 + d.imag**2).sum(axis=0)
    c = np.concatenate(([0.0], np.cumsum(e)))
    return np.maximum(c[n:] - c[:-n], 0.0)
