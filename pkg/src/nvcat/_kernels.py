"""Hot numeric loops.

Each kernel exists twice: a numba ``@njit`` version and a pure numpy
version.  Set ``NVCAT_DISABLE_NUMBA=1`` before import to force the numpy
path (useful for debugging and for platforms without numba).
"""
import os

import numpy as np

_DISABLE = os.environ.get("NVCAT_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLE:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag in subprocess
    HAVE_NUMBA = False

_PI_QUARTER = np.pi ** -0.25
_LN_1E100 = 100.0 * np.log(10.0)


# Normalized Hermite functions phi_n(x) = H_n(x) exp(-x^2/2) / sqrt(2^n n! sqrt(pi))
# via the stable three-term recurrence
#   phi_{n+1} = sqrt(2/(n+1)) x phi_n - sqrt(n/(n+1)) phi_{n-1}.
# For large |x| phi_0 underflows before the recurrence can grow it back, so
# the table is seeded in log space where needed.


def _hermite_table_np(x, nmax):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros((nmax + 1, x.size))
    # carry a log-scale to avoid underflow of exp(-x^2/2) far from the origin
    log_scale = -0.5 * x * x
    prev = np.zeros_like(x)
    cur = np.full_like(x, _PI_QUARTER)
    out[0] = cur * np.exp(log_scale)
    for n in range(nmax):
        nxt = np.sqrt(2.0 / (n + 1)) * x * cur - np.sqrt(n / (n + 1.0)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e100
        if big.any():
            cur[big] *= 1e-100
            prev[big] *= 1e-100
            log_scale[big] += _LN_1E100
        out[n + 1] = cur * np.exp(log_scale)
    return out


def _hermite_sum_np(x, coeffs):
    table = _hermite_table_np(x, len(coeffs) - 1)
    return np.asarray(coeffs) @ table


if HAVE_NUMBA:

    @njit(cache=True)
    def _recurrence_coeffs(nmax):
        a = np.empty(nmax)
        b = np.empty(nmax)
        for n in range(nmax):
            a[n] = np.sqrt(2.0 / (n + 1))
            b[n] = np.sqrt(n / (n + 1.0))
        return a, b

    @njit(cache=True)
    def _hermite_table_nb(x, nmax):
        # level-major so that every write is contiguous; exp() only on rescale
        npts = x.size
        out = np.empty((nmax + 1, npts))
        a, b = _recurrence_coeffs(nmax)
        prev = np.zeros(npts)
        cur = np.empty(npts)
        log_scale = np.empty(npts)
        fac = np.empty(npts)
        for j in range(npts):
            log_scale[j] = -0.5 * x[j] * x[j]
            fac[j] = np.exp(log_scale[j])
            cur[j] = _PI_QUARTER
            out[0, j] = _PI_QUARTER * fac[j]
        for n in range(nmax):
            an, bn = a[n], b[n]
            big = False
            for j in range(npts):  # branch-free so it vectorizes
                nxt = an * x[j] * cur[j] - bn * prev[j]
                prev[j] = cur[j]
                cur[j] = nxt
                big |= abs(nxt) > 1e100
            if big:
                for j in range(npts):
                    if abs(cur[j]) > 1e100:
                        cur[j] *= 1e-100
                        prev[j] *= 1e-100
                        log_scale[j] += _LN_1E100
                        fac[j] = np.exp(log_scale[j])
            row = out[n + 1]
            for j in range(npts):
                row[j] = cur[j] * fac[j]
        return out

    @njit(cache=True)
    def _hermite_sum_nb(x, coeffs):
        npts = x.size
        nmax = coeffs.size - 1
        a, b = _recurrence_coeffs(nmax)
        out = np.empty(npts, dtype=np.complex128)
        for j in range(npts):
            xj = x[j]
            log_scale = -0.5 * xj * xj
            prev = 0.0
            cur = _PI_QUARTER
            # accumulate in units of exp(log_scale)
            acc_re = coeffs[0].real * cur
            acc_im = coeffs[0].imag * cur
            for n in range(nmax):
                nxt = a[n] * xj * cur - b[n] * prev
                prev = cur
                cur = nxt
                if abs(cur) > 1e100:
                    cur *= 1e-100
                    prev *= 1e-100
                    acc_re *= 1e-100
                    acc_im *= 1e-100
                    log_scale += _LN_1E100
                c = coeffs[n + 1]
                acc_re += c.real * cur
                acc_im += c.imag * cur
            f = np.exp(log_scale)
            out[j] = complex(acc_re * f, acc_im * f)
        return out


def hermite_table(x, nmax):
    """Table ``T[n, j] = phi_n(x_j)`` for ``n = 0..nmax``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if HAVE_NUMBA:
        return _hermite_table_nb(x, int(nmax))
    return _hermite_table_np(x, int(nmax))


def hermite_sum(x, coeffs):
    """Evaluate ``sum_n coeffs[n] phi_n(x)`` without storing the full table."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    if HAVE_NUMBA:
        return _hermite_sum_nb(x, coeffs)
    return _hermite_sum_np(x, coeffs).astype(np.complex128)


def hermite_table_numpy(x, nmax):
    return _hermite_table_np(np.asarray(x, dtype=np.float64), int(nmax))


def hermite_sum_numpy(x, coeffs):
    return _hermite_sum_np(np.asarray(x, dtype=np.float64), np.asarray(coeffs, dtype=np.complex128))
