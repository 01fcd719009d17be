# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled simplex kernels: pricing, ratio test and the tableau pivot.

The pivot is the hot loop of the branch-and-bound search (hundreds of LP
solves per model, each a few hundred pivots over a dense tableau); doing the
elimination in one fused C pass avoids the temporaries of the numpy fallback.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs


def price_dantzig(double[::1] obj, Py_ssize_t ncols, double tol):
    cdef Py_ssize_t j, best = -1
    cdef double v, bestv = -tol
    for j in range(ncols):
        v = obj[j]
        if v < bestv:
            bestv = v
            best = j
    return best


def price_bland(double[::1] obj, Py_ssize_t ncols, double tol):
    cdef Py_ssize_t j
    for j in range(ncols):
        if obj[j] < -tol:
            return j
    return -1


def ratio_test(double[:, ::1] tab, Py_ssize_t m, Py_ssize_t col,
               Py_ssize_t rhs_col, long long[::1] basis, double pivtol):
    cdef Py_ssize_t i, best = -1
    cdef double a, r, bestr = 0.0, tie
    for i in range(m):
        a = tab[i, col]
        if a > pivtol:
            r = tab[i, rhs_col] / a
            if best < 0:
                best = i
                bestr = r
            else:
                tie = 1e-9 * (fabs(bestr) if fabs(bestr) > 1.0 else 1.0)
                if r < bestr - tie:
                    best = i
                    bestr = r
                elif r <= bestr + tie and basis[i] < basis[best]:
                    best = i
    return best


def pivot(double[:, ::1] tab, Py_ssize_t prow, Py_ssize_t pcol):
    cdef Py_ssize_t nrows = tab.shape[0]
    cdef Py_ssize_t ncols = tab.shape[1]
    cdef Py_ssize_t i, j
    cdef double piv = tab[prow, pcol]
    cdef double factor
    for j in range(ncols):
        tab[prow, j] /= piv
    for i in range(nrows):
        if i == prow:
            continue
        factor = tab[i, pcol]
        if factor != 0.0:
            for j in range(ncols):
                tab[i, j] -= factor * tab[prow, j]
            tab[i, pcol] = 0.0
    tab[prow, pcol] = 1.0
