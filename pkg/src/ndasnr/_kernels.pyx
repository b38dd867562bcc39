# cython: language_level=3
"""Compiled hot kernels: counter-based sampling, moments, ML iteration.

Mirrors ``_pykernels`` operation for operation.  All loops release the GIL
so the harness can run chunks on a thread pool.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, tanh
from libc.stdint cimport uint64_t, int64_t
from scipy.special.cython_special cimport ndtri

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t COUNTER_OFFSET = 0xD1B54A32D192ED03ULL
cdef double INV_2_52 = 2.220446049250313e-16


cdef inline uint64_t _fmix64(uint64_t x) noexcept nogil:
    x ^= x >> 33
    x *= 0xFF51AFD7ED558CCDULL
    x ^= x >> 33
    x *= 0xC4CEB9FE1A85EC53ULL
    x ^= x >> 33
    return x


cdef inline uint64_t _bits(uint64_t key, uint64_t ctr) noexcept nogil:
    return _fmix64(key ^ _fmix64(ctr * GOLDEN + COUNTER_OFFSET))


cdef inline double _uniform(uint64_t b) noexcept nogil:
    return (<double>(b >> 12) + 0.5) * INV_2_52


def fmix64(x):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] a = np.ascontiguousarray(
        np.atleast_1d(np.asarray(x, dtype=np.uint64))).ravel()
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty_like(a)
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        out[i] = _fmix64(a[i])
    return out.reshape(np.shape(x))


def counter_bits(keys, counters):
    k, c = np.broadcast_arrays(np.asarray(keys, dtype=np.uint64),
                               np.asarray(counters, dtype=np.uint64))
    cdef const uint64_t[::1] kf = np.ascontiguousarray(k).ravel()
    cdef const uint64_t[::1] cf = np.ascontiguousarray(c).ravel()
    out = np.empty(kf.shape[0], dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(kf.shape[0]):
            o[i] = _bits(kf[i], cf[i])
    return out.reshape(k.shape)


def bits_to_uniform(bits):
    b = np.asarray(bits, dtype=np.uint64)
    return ((b >> np.uint64(12)).astype(np.float64) + 0.5) * INV_2_52


def trial_keys(cell_key, Py_ssize_t start, Py_ssize_t count):
    out = np.empty(count, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef uint64_t key = <uint64_t>int(cell_key)
    cdef Py_ssize_t j
    with nogil:
        for j in range(count):
            o[j] = _bits(key, <uint64_t>(start + j))
    return out


def generate(keys, Py_ssize_t n, double mu, double sigma, double q):
    cdef const uint64_t[::1] kv = np.ascontiguousarray(
        np.asarray(keys, dtype=np.uint64).ravel())
    cdef Py_ssize_t rows = kv.shape[0]
    out = np.empty((rows, n), dtype=np.float64)
    cdef double[:, ::1] y = out
    cdef Py_ssize_t r, k
    cdef uint64_t key
    cdef double x, w, u
    with nogil:
        for r in range(rows):
            key = kv[r]
            for k in range(n):
                u = _uniform(_bits(key, <uint64_t>(2 * k)))
                x = 1.0 if u < q else -1.0
                w = ndtri(_uniform(_bits(key, <uint64_t>(2 * k + 1))))
                y[r, k] = mu * x + sigma * w
    return out


def batch_moments(y_in):
    y_arr = np.ascontiguousarray(y_in, dtype=np.float64)
    if y_arr.ndim != 2:
        raise ValueError("expected a 2-d array of shape (rows, n)")
    cdef const double[:, ::1] y = y_arr
    cdef Py_ssize_t rows = y.shape[0], n = y.shape[1]
    m1 = np.empty(rows)
    m2 = np.empty(rows)
    m4 = np.empty(rows)
    ma = np.empty(rows)
    cdef double[::1] o1 = m1, o2 = m2, o4 = m4, oa = ma
    cdef double s[4]
    cdef double c[4]
    cdef double term[4]
    cdef double v, v2, t
    cdef Py_ssize_t r, j, i
    with nogil:
        for r in range(rows):
            for i in range(4):
                s[i] = 0.0
                c[i] = 0.0
            for j in range(n):
                v = y[r, j]
                v2 = v * v
                term[0] = v
                term[1] = v2
                term[2] = v2 * v2
                term[3] = fabs(v)
                for i in range(4):
                    t = s[i] + term[i]
                    if fabs(s[i]) >= fabs(term[i]):
                        c[i] = c[i] + ((s[i] - t) + term[i])
                    else:
                        c[i] = c[i] + ((term[i] - t) + s[i])
                    s[i] = t
            o1[r] = (s[0] + c[0]) / n
            o2[r] = (s[1] + c[1]) / n
            o4[r] = (s[2] + c[2]) / n
            oa[r] = (s[3] + c[3]) / n
    return m1, m2, m4, ma


def batch_ml(y_in, m2_in, mu0_in, int max_iter, double tol):
    cdef const double[:, ::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef const double[::1] m2 = np.ascontiguousarray(m2_in, dtype=np.float64)
    cdef Py_ssize_t rows = y.shape[0], n = y.shape[1]
    mu_out = np.ascontiguousarray(mu0_in, dtype=np.float64).copy()
    iters_out = np.zeros(rows, dtype=np.int64)
    cdef double[::1] mu = mu_out
    cdef int64_t[::1] iters = iters_out
    cdef Py_ssize_t r, j
    cdef int k
    cdef double cap, stop, m, t, s, c, v, term, tt, new
    with nogil:
        for r in range(rows):
            cap = (1.0 - 1e-9) * sqrt(m2[r])
            stop = tol * sqrt(m2[r])
            m = mu[r]
            if m > cap:
                m = cap
            if m2[r] > 0.0:
                for k in range(max_iter):
                    t = m / (m2[r] - m * m)
                    s = 0.0
                    c = 0.0
                    for j in range(n):
                        v = y[r, j]
                        term = v * tanh(t * v)
                        tt = s + term
                        if fabs(s) >= fabs(term):
                            c = c + ((s - tt) + term)
                        else:
                            c = c + ((term - tt) + s)
                        s = tt
                    new = (s + c) / n
                    if new > cap:
                        new = cap
                    iters[r] += 1
                    if fabs(new - m) < stop:
                        m = new
                        break
                    m = new
            mu[r] = m
    return mu_out, iters_out
