# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops of the GBDT core.

Same contracts and summation order as ``_pykernels``; see that module.
"""
import numpy as np

from libc.stdint cimport int32_t, int64_t


def build_histogram(const int32_t[::1] rows, const int64_t[::1] indptr,
                    const int32_t[::1] indices, const double[::1] grad,
                    const double[::1] hess, Py_ssize_t n_features):
    hg_arr = np.zeros(n_features, dtype=np.float64)
    hh_arr = np.zeros(n_features, dtype=np.float64)
    hc_arr = np.zeros(n_features, dtype=np.int64)
    cdef double[::1] hg = hg_arr
    cdef double[::1] hh = hh_arr
    cdef int64_t[::1] hc = hc_arr
    cdef Py_ssize_t i, p, n = rows.shape[0]
    cdef int32_t r, f
    cdef double gr, hr
    with nogil:
        for i in range(n):
            r = rows[i]
            gr = grad[r]
            hr = hess[r]
            for p in range(indptr[r], indptr[r + 1]):
                f = indices[p]
                hg[f] += gr
                hh[f] += hr
                hc[f] += 1
    return hg_arr, hh_arr, hc_arr


cdef inline bint _has(const int64_t[::1] indptr, const int32_t[::1] indices,
                      int32_t r, int32_t f) noexcept nogil:
    cdef int64_t lo = indptr[r], hi = indptr[r + 1], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < f:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[r + 1] and indices[lo] == f


def row_has_feature(const int32_t[::1] rows, const int64_t[::1] indptr,
                    const int32_t[::1] indices, int32_t feature):
    out_arr = np.zeros(rows.shape[0], dtype=np.bool_)
    cdef unsigned char[::1] out = out_arr.view(np.uint8)
    cdef Py_ssize_t i
    with nogil:
        for i in range(rows.shape[0]):
            out[i] = _has(indptr, indices, rows[i], feature)
    return out_arr


def predict_leaves(const int64_t[::1] indptr, const int32_t[::1] indices,
                   const int32_t[::1] feature, const int32_t[::1] left,
                   const int32_t[::1] right):
    cdef Py_ssize_t n = indptr.shape[0] - 1, r
    out_arr = np.empty(n, dtype=np.int32)
    cdef int32_t[::1] out = out_arr
    cdef int32_t node
    with nogil:
        for r in range(n):
            node = 0
            while feature[node] >= 0:
                if _has(indptr, indices, <int32_t>r, feature[node]):
                    node = right[node]
                else:
                    node = left[node]
            out[r] = node
    return out_arr
