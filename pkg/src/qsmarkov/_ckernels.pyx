# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for path sampling and path-indexed log sums.

Semantics match ``_pykernels`` exactly, including summation order, so the two
backends produce bitwise-identical results.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def sample_symbols(const double[:, ::1] u, const double[::1] lam_cdf, const double[:, :, ::1] cdfs):
    """Inverse-CDF sampling of paths from uniforms.

    ``u[c, 0]`` picks the first symbol from ``lam_cdf``; ``u[c, k]`` picks
    symbol ``k`` from row ``x[k-1]`` of ``cdfs[k-1]``.  The chosen symbol is
    the number of CDF entries (last excluded) that are ``<= u``.
    """
    cdef Py_ssize_t count = u.shape[0], L = u.shape[1], N = lam_cdf.shape[0]
    cdef Py_ssize_t c, k, s, k2
    cdef int x
    cdef double v
    if cdfs.shape[0] < L - 1:
        raise ValueError("not enough transition CDFs for the path length")
    out = np.empty((count, L), dtype=np.int32)
    cdef int[:, ::1] paths = out
    with nogil:
        for c in range(count):
            v = u[c, 0]
            x = 0
            for s in range(N - 1):
                if lam_cdf[s] <= v:
                    x += 1
            paths[c, 0] = x
            for k in range(1, L):
                v = u[c, k]
                s = x
                x = 0
                for k2 in range(N - 1):
                    if cdfs[k - 1, s, k2] <= v:
                        x += 1
                paths[c, k] = x
    return out


def path_log_sum(const int[:, ::1] paths, const double[:, :, ::1] table, Py_ssize_t offset=0):
    """``out[c] = sum_k table[k, x[c, k+offset], x[c, k+offset+1]]``, summed in order of ``k``."""
    cdef Py_ssize_t count = paths.shape[0], K = table.shape[0]
    cdef Py_ssize_t c, k
    cdef double acc
    if K and offset + K + 1 > paths.shape[1]:
        raise ValueError("paths are too short for the table")
    out = np.zeros(count, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for c in range(count):
            acc = 0.0
            for k in range(K):
                acc = acc + table[k, paths[c, k + offset], paths[c, k + offset + 1]]
            res[c] = acc
    return out
