"""Compiled partial-sum kernels for Monte Carlo calibration."""

import numpy as np

from libc.math cimport fabs, sqrt


cdef inline double _norm(const double* v, Py_ssize_t d, bint p_inf) noexcept nogil:
    cdef Py_ssize_t k
    cdef double acc = 0.0, x
    if p_inf:
        for k in range(d):
            x = fabs(v[k])
            if x > acc:
                acc = x
        return acc
    for k in range(d):
        acc += v[k] * v[k]
    return sqrt(acc)


cdef double _path_stat_1d(const double[:, ::1] gen, const double[::1] g, bint full_sum) noexcept nogil:
    cdef Py_ssize_t t, T = gen.shape[0]
    cdef double acc = 0.0, best = 0.0, cur
    for t in range(T):
        acc += gen[t, 0] * g[t]
        cur = fabs(acc)
        if cur > best:
            best = cur
    return fabs(acc) if full_sum else best


cdef double _path_stat(const double[:, ::1] gen, const double[::1] g,
                       double* acc, bint p_inf, bint full_sum) noexcept nogil:
    cdef Py_ssize_t t, k
    cdef Py_ssize_t T = gen.shape[0], d = gen.shape[1]
    cdef double best = 0.0, cur, w
    if d == 1:
        return _path_stat_1d(gen, g, full_sum)
    for k in range(d):
        acc[k] = 0.0
    for t in range(T):
        w = g[t]
        for k in range(d):
            acc[k] += gen[t, k] * w
        if not full_sum:
            cur = _norm(acc, d, p_inf)
            if cur > best:
                best = cur
    if full_sum:
        best = _norm(acc, d, p_inf)
    return best


def mc_statistics(const double[:, ::1] gen, const double[:, ::1] normals, bint p_inf, bint full_sum):
    """Statistic of every simulated path ``gen[t] * normals[r, t]``, unscaled."""
    cdef Py_ssize_t S = normals.shape[0], d = gen.shape[1], r
    if normals.shape[1] != gen.shape[0]:
        raise ValueError("normals must have one column per time")
    if full_sum:
        # only the endpoint matters: a plain matrix product, left to BLAS
        ends = np.asarray(normals) @ np.asarray(gen)
        return np.abs(ends).max(axis=1) if p_inf else np.sqrt((ends * ends).sum(axis=1))
    out = np.empty(S)
    cdef double[::1] out_v = out
    acc_arr = np.empty(max(d, 1))
    cdef double[::1] acc = acc_arr
    with nogil:
        for r in range(S):
            out_v[r] = _path_stat(gen, normals[r], &acc[0], p_inf, full_sum)
    return out


def path_statistic(const double[:, ::1] values, bint p_inf, bint full_sum):
    """Statistic of the observed path ``values`` (rows are times), unscaled."""
    cdef Py_ssize_t d = values.shape[1]
    ones = np.ones(values.shape[0])
    cdef double[::1] g = ones
    acc_arr = np.empty(max(d, 1))
    cdef double[::1] acc = acc_arr
    cdef double res
    with nogil:
        res = _path_stat(values, g, &acc[0], p_inf, full_sum)
    return res
