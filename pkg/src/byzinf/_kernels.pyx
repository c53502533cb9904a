# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the simulation kernels in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline int _categorical(double u, const double[:] cdf, int m) noexcept nogil:
    # 1 + number of cdf[k] <= u for k < m - 1 (bisect_right)
    cdef int lo = 0
    cdef int hi = m - 1
    cdef int mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo + 1


def draw_symbols(u_obs, obs_cdf, byz, u_flip, attack_cdf):
    cdef const double[:, :] uo = np.ascontiguousarray(u_obs, dtype=np.float64)
    cdef const double[:, :] uf = np.ascontiguousarray(u_flip, dtype=np.float64)
    cdef const double[:, :] oc = np.ascontiguousarray(obs_cdf, dtype=np.float64)
    cdef const double[:, :] ac = np.ascontiguousarray(attack_cdf, dtype=np.float64)
    cdef Py_ssize_t rows = uo.shape[0]
    cdef Py_ssize_t n = uo.shape[1]
    cdef int m = oc.shape[1]
    b_arr = np.ascontiguousarray(
        np.broadcast_to(np.asarray(byz, dtype=bool), (rows, n)), dtype=np.uint8
    )
    cdef const unsigned char[:, :] b = b_arr
    out = np.empty((rows, n), dtype=np.int32)
    cdef int[:, :] o = out
    cdef Py_ssize_t r, i
    cdef int s
    with nogil:
        for r in range(rows):
            for i in range(n):
                s = _categorical(uo[r, i], oc[r], m)
                if b[r, i]:
                    s = _categorical(uf[r, i], ac[s - 1], m)
                o[r, i] = s
    return out


def symbol_counts(symbols, int m):
    cdef const int[:, :] s = np.ascontiguousarray(symbols, dtype=np.int32)
    cdef Py_ssize_t rows = s.shape[0]
    cdef Py_ssize_t n = s.shape[1]
    counts = np.zeros((rows, m), dtype=np.int64)
    cdef long long[:, :] c = counts
    cdef Py_ssize_t r, i
    with nogil:
        for r in range(rows):
            for i in range(n):
                c[r, s[r, i] - 1] += 1
    return counts


def cumulative_deviations(symbols, centroids, predicted):
    cdef const int[:, :] s = np.ascontiguousarray(symbols, dtype=np.int32)
    cdef const double[:] c = np.ascontiguousarray(centroids, dtype=np.float64)
    cdef const double[:] p = np.ascontiguousarray(predicted, dtype=np.float64)
    cdef Py_ssize_t steps = s.shape[0]
    cdef Py_ssize_t n = s.shape[1]
    out = np.empty((steps, n), dtype=np.float64)
    cdef double[:, :] o = out
    cdef Py_ssize_t t, i
    cdef double diff
    with nogil:
        for t in range(steps):
            for i in range(n):
                diff = c[s[t, i] - 1] - p[t]
                if t == 0:
                    o[t, i] = diff * diff
                else:
                    o[t, i] = o[t - 1, i] + diff * diff
    return out
