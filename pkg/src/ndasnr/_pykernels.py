"""Pure-numpy implementations of the hot kernels.

Every routine here has a twin in ``_kernels.pyx`` that performs the same
IEEE-754 operations in the same order, so the sampling and moment kernels
agree bit for bit across backends.  ``batch_ml`` may differ in the last ulp
because numpy and libm are free to implement ``tanh`` differently.
"""

import numpy as np
from scipy.special import ndtri

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
COUNTER_OFFSET = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xFF51AFD7ED558CCD)
_M2 = np.uint64(0xC4CEB9FE1A85EC53)
_S33 = np.uint64(33)
_S12 = np.uint64(12)
_INV_2_52 = 2.0**-52

BACKEND = "python"


def fmix64(x):
    """Murmur3 64-bit finalizer on a uint64 array (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x ^ (x >> _S33)
        x = x * _M1
        x = x ^ (x >> _S33)
        x = x * _M2
        x = x ^ (x >> _S33)
    return x


def counter_bits(keys, counters):
    """64 random bits for every (key, counter) pair, broadcasting."""
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        c = fmix64(counters * GOLDEN + COUNTER_OFFSET)
    return fmix64(keys ^ c)


def bits_to_uniform(bits):
    # 52 high bits plus a half step keeps the result strictly inside (0, 1)
    k = (bits >> _S12).astype(np.float64)
    return (k + 0.5) * _INV_2_52


def trial_keys(cell_key, start, count):
    """Keys for trials ``start .. start+count-1`` of one cell."""
    ctr = np.arange(start, start + count, dtype=np.uint64)
    return counter_bits(np.uint64(cell_key), ctr)


def generate(keys, n, mu, sigma, q):
    """One row of ``n`` observables per key: ``mu*x + sigma*w``.

    Counter ``2k`` drives the symbol of sample ``k`` and ``2k+1`` its noise.
    """
    keys = np.asarray(keys, dtype=np.uint64).reshape(-1, 1)
    ctr = np.arange(2 * n, dtype=np.uint64).reshape(1, -1)
    u = bits_to_uniform(counter_bits(keys, ctr))
    x = np.where(u[:, 0::2] < q, 1.0, -1.0)
    w = ndtri(u[:, 1::2])
    return mu * x + sigma * w


def _neumaier_step(s, c, v):
    t = s + v
    c = c + np.where(np.abs(s) >= np.abs(v), (s - t) + v, (v - t) + s)
    return t, c


def batch_moments(y):
    """Row-wise (m1, m2, m4, abs_moment) with compensated summation."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError("expected a 2-d array of shape (rows, n)")
    rows, n = y.shape
    cols = np.ascontiguousarray(y.T)
    sums = [np.zeros(rows) for _ in range(4)]
    comps = [np.zeros(rows) for _ in range(4)]
    for j in range(n):
        v = cols[j]
        v2 = v * v
        terms = (v, v2, v2 * v2, np.abs(v))
        for i, term in enumerate(terms):
            sums[i], comps[i] = _neumaier_step(sums[i], comps[i], term)
    return tuple((s + c) / n for s, c in zip(sums, comps))


def batch_ml(y, m2, mu0, max_iter, tol):
    """Fixed-point iteration for the amplitude, one row per trial.

    Returns the final amplitude estimates and the iteration count per row.
    """
    y = np.asarray(y, dtype=np.float64)
    rows, n = y.shape
    m2 = np.asarray(m2, dtype=np.float64)
    cap = (1.0 - 1e-9) * np.sqrt(m2)
    stop = tol * np.sqrt(m2)
    mu = np.minimum(np.asarray(mu0, dtype=np.float64), cap)
    iters = np.zeros(rows, dtype=np.int64)
    active = m2 > 0.0
    cols = np.ascontiguousarray(y.T)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        sub = cols[:, idx]
        m = mu[idx]
        t = m / (m2[idx] - m * m)
        s = np.zeros(idx.size)
        c = np.zeros(idx.size)
        for j in range(n):
            v = sub[j]
            s, c = _neumaier_step(s, c, v * np.tanh(t * v))
        new = np.minimum((s + c) / n, cap[idx])
        delta = np.abs(new - m)
        mu[idx] = new
        iters[idx] += 1
        active[idx[delta < stop[idx]]] = False
    return mu, iters
