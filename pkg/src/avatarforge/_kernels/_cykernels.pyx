# cython: boundscheck=False, wraparound=False, cdivision=False
"""Compiled relaxation kernel; arithmetic twin of _pykernels.sor_relax."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def sor_relax(cnp.float64_t[:, ::1] values, cnp.uint8_t[:, ::1] mask,
              double omega, double tol, int max_sweeps):
    """Gauss-Seidel SOR sweeps of the 4-neighbor Laplace stencil.

    Same contract as the pure-Python twin: in-place update of masked
    pixels, row-major sweep, (up, down, left, right) neighbor order,
    zero-flux image border. Returns (sweeps_run, last_max_update).
    """
    cdef Py_ssize_t h = values.shape[0]
    cdef Py_ssize_t w = values.shape[1]
    cdef Py_ssize_t n_px = 0
    cdef Py_ssize_t i, j, k
    for i in range(h):
        for j in range(w):
            if mask[i, j]:
                n_px += 1

    cdef cnp.ndarray[cnp.intp_t, ndim=1] ci = np.empty(n_px, dtype=np.intp)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] cj = np.empty(n_px, dtype=np.intp)
    k = 0
    for i in range(h):
        for j in range(w):
            if mask[i, j]:
                ci[k] = i
                cj[k] = j
                k += 1

    cdef double max_update = 0.0
    cdef double acc, delta
    cdef int n, sweeps = 0
    cdef int sweep
    for sweep in range(1, max_sweeps + 1):
        sweeps = sweep
        max_update = 0.0
        for k in range(n_px):
            i = ci[k]
            j = cj[k]
            acc = 0.0
            n = 0
            if i > 0:
                acc += values[i - 1, j]
                n += 1
            if i < h - 1:
                acc += values[i + 1, j]
                n += 1
            if j > 0:
                acc += values[i, j - 1]
                n += 1
            if j < w - 1:
                acc += values[i, j + 1]
                n += 1
            delta = omega * (acc / n - values[i, j])
            values[i, j] += delta
            if delta < 0.0:
                delta = -delta
            if delta > max_update:
                max_update = delta
        if max_update < tol:
            break
    return sweeps, max_update
