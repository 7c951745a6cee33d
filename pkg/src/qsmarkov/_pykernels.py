"""Pure-NumPy fallback for the compiled kernels in ``_ckernels.pyx``."""

import numpy as np


def sample_symbols(u, lam_cdf, cdfs):
    u = np.ascontiguousarray(u, dtype=float)
    count, L = u.shape
    if len(cdfs) < L - 1:
        raise ValueError("not enough transition CDFs for the path length")
    paths = np.empty((count, L), dtype=np.int32)
    x = (lam_cdf[None, :-1] <= u[:, :1]).sum(axis=1)
    paths[:, 0] = x
    for k in range(1, L):
        rows = cdfs[k - 1][x, :-1]
        x = (rows <= u[:, k : k + 1]).sum(axis=1)
        paths[:, k] = x
    return paths


def path_log_sum(paths, table, offset=0):
    paths = np.asarray(paths)
    K = len(table)
    if K and offset + K + 1 > paths.shape[1]:
        raise ValueError("paths are too short for the table")
    acc = np.zeros(paths.shape[0])
    # column-by-column keeps the summation order of the compiled loop
    for k in range(K):
        acc = acc + table[k, paths[:, k + offset], paths[:, k + offset + 1]]
    return acc
