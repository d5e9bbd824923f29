# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo kernels (see ``_pykernels`` for the reference versions)."""

import numpy as np
from libc.math cimport pow, floor
from libc.stdint cimport uint64_t


def pareto_row_sums(const double[:, ::1] u, double p_r, double mid, double x_min,
                    double inv_alpha, double c_r, double c_l, double shift):
    """Row sums of inverse-survival draws of a constant-ell tail model."""
    cdef Py_ssize_t rows = u.shape[0], cols = u.shape[1], i, j
    out = np.empty(rows)
    cdef double[::1] o = out
    cdef double s, uu, x
    cdef double edge = p_r + mid
    with nogil:
        for i in range(rows):
            s = 0.0
            for j in range(cols):
                uu = u[i, j]
                if uu <= p_r:
                    x = pow(c_r / uu, inv_alpha)
                    if x < x_min:
                        x = x_min
                elif uu <= edge:
                    x = x_min - 2.0 * x_min * (uu - p_r) / mid
                else:
                    x = -pow(c_l / (1.0 - uu), inv_alpha)
                    if x > -x_min:
                        x = -x_min
                s += x - shift
            o[i] = s
    return out


cdef inline void _gauss_step(double* x, double* o, Py_ssize_t m,
                             double e, double shift, double sign) noexcept nogil:
    cdef Py_ssize_t i
    cdef double y
    for i in range(m):
        o[i] += sign * (pow(x[i], e) - shift)
        y = 1.0 / x[i]
        x[i] = y - floor(y)


cdef inline void _mark_zero(const double* x, unsigned char* bad, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(m):
        bad[i] |= x[i] <= 0.0


cdef inline void _power_add(const double* x, double* o, Py_ssize_t m,
                            double e, double shift, double sign) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(m):
        o[i] += sign * (pow(x[i], e) - shift)


def gauss_power_sums(const double[::1] x0, Py_ssize_t n, double inv_alpha,
                     double shift, double sign):
    """Ergodic sums of ``sign*(x^-inv_alpha - shift)`` along Gauss-map orbits.

    Orbits that hit 0 return NaN.  The row loop is innermost so the power
    evaluations vectorize; the module is built with finite-math, so a hit
    is tracked in a mask and a poisoned row is parked at 1/2.
    """
    cdef Py_ssize_t m = x0.shape[0], i, j
    out = np.zeros(m)
    if m == 0:
        return out
    xs = np.array(x0, dtype=np.float64)
    mask = np.zeros(m, dtype=np.uint8)
    cdef double[::1] o = out
    cdef double[::1] x = xs
    cdef unsigned char[::1] bad = mask
    cdef double e = -inv_alpha
    with nogil:
        for j in range(n):
            _mark_zero(&x[0], &bad[0], m)
            for i in range(m):
                if bad[i]:
                    x[i] = 0.5
            _gauss_step(&x[0], &o[0], m, e, shift, sign)
    out[mask.view(bool)] = np.nan
    return out


cdef inline uint64_t _window(const uint64_t[:, ::1] w, Py_ssize_t i, Py_ssize_t k,
                             int sh) noexcept nogil:
    if sh == 0:
        return w[i, k]
    return (w[i, k] << sh) | (w[i, k + 1] >> (64 - sh))


def doubling_power_sums(const uint64_t[:, ::1] words, Py_ssize_t n, double inv_alpha,
                        double shift, double sign):
    """Ergodic sums along exact doubling-map orbits given by binary digits.

    Row i holds the digits of x_0 (most significant first); ``T^j x_0`` is read
    from a 128-bit window starting at bit j.
    """
    cdef Py_ssize_t m = words.shape[0], i, j, k
    cdef int sh
    out = np.zeros(m)
    tmp = np.empty(m)
    cdef double[::1] o = out
    cdef double[::1] x = tmp
    cdef double e = -inv_alpha
    cdef double two64 = 5.421010862427522e-20
    cdef double two128 = 2.938735877055719e-39
    if m == 0:
        return out
    if n > 0 and words.shape[1] < (n - 1) // 64 + 3:
        raise ValueError("not enough digit words for n steps")
    with nogil:
        for j in range(n):
            k = j >> 6
            sh = <int>(j & 63)
            for i in range(m):
                x[i] = <double>_window(words, i, k, sh) * two64 + <double>_window(words, i, k + 1, sh) * two128
            _power_add(&x[0], &o[0], m, e, shift, sign)
    return out
