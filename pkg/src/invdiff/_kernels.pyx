# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for density evaluation and pairwise relation scans."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, M_PI, floor, fabs

cnp.import_array()

BACKEND = "cython"


def gaussian_density(const double[::1] samples, const double[::1] points, double bandwidth):
    cdef Py_ssize_t n = samples.shape[0], m = points.shape[0], i, k
    cdef double inv_h = 1.0 / bandwidth
    cdef double norm = 1.0 / (n * bandwidth * sqrt(2.0 * M_PI))
    cdef double acc, z
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] res = out
    for k in range(m):
        acc = 0.0
        for i in range(n):
            z = (points[k] - samples[i]) * inv_h
            acc += exp(-0.5 * z * z)
        res[k] = acc * norm
    return out


def order_relation(const double[::1] x, const double[::1] y):
    """Bitmask over rows: 1 if x == y everywhere, 2 if x <= y, 4 if y <= x."""
    cdef Py_ssize_t n = x.shape[0], r
    cdef int eq = 1, le = 1, ge = 1
    for r in range(n):
        if x[r] != y[r]:
            eq = 0
        if x[r] > y[r]:
            le = 0
        if x[r] < y[r]:
            ge = 0
        if not (eq or le or ge):
            break
    return eq | (le << 1) | (ge << 2)


def linear_relation(const double[::1] y, const double[::1] x, int max_slope, double max_intercept):
    """Find integer a != 0, |a| <= max_slope, integer |b| <= max_intercept with y == a*x + b."""
    cdef Py_ssize_t n = x.shape[0], r, second = -1
    cdef double a, b
    if n < 2:
        return (False, 0, 0)
    for r in range(1, n):
        if x[r] != x[0]:
            second = r
            break
    if second < 0:
        return (False, 0, 0)
    a = (y[second] - y[0]) / (x[second] - x[0])
    if a != floor(a) or a == 0.0 or fabs(a) > max_slope:
        return (False, 0, 0)
    b = y[0] - a * x[0]
    if b != floor(b) or fabs(b) > max_intercept:
        return (False, 0, 0)
    for r in range(n):
        if y[r] != a * x[r] + b:
            return (False, 0, 0)
    return (True, <long long>a, <long long>b)
