# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: noncentral chi-square CDF and MEWMA run simulation.

Must stay numerically interchangeable with ``_kernels_py``; the run
simulator in particular is bit-identical to the NumPy fallback.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, floor, isinf, INFINITY
from libc.stdint cimport uint64_t, int64_t
from scipy.special.cython_special cimport gammainc, gammaln, ndtri

cnp.import_array()

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef int MAX_TERMS = 100000

BACKEND = "compiled"


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double unit_open(uint64_t u) noexcept nogil:
    return (<double>(u >> 11) + 0.5) * 1.1102230246251565e-16


cdef double ncx2_scalar(double x, double half_df, double mu, double tol,
                        double *bound, int *capped) noexcept nogil:
    cdef double y, total, w0, w, pk, up, lo, ratio
    cdef long k0, k
    cdef int n
    bound[0] = 0.0
    capped[0] = 0
    if x <= 0.0:
        return 0.0
    if isinf(x):
        return 1.0
    y = 0.5 * x
    if mu == 0.0:
        return gammainc(half_df, y)
    k0 = <long>floor(mu)
    w0 = exp(k0 * log(mu) - mu - gammaln(k0 + 1.0))
    total = 0.0
    # upward from the Poisson mode
    w = w0
    k = k0
    n = 0
    while True:
        pk = gammainc(half_df + k, y)
        total += w * pk
        w = w * mu / (k + 1.0)
        k += 1
        n += 1
        if k > mu:
            ratio = mu / (k + 1.0)
            up = pk * w / (1.0 - ratio)
            if up < 0.5 * tol:
                break
        if n > MAX_TERMS:
            capped[0] = 1
            up = pk * w / (1.0 - mu / (k + 1.0))
            break
    # downward
    w = w0
    k = k0
    lo = 0.0
    while k > 0:
        w = w * k / mu
        k -= 1
        total += w * gammainc(half_df + k, y)
        n += 1
        if k == 0:
            lo = 0.0
            break
        lo = w * (k / mu) / (1.0 - (k - 1.0) / mu)
        if lo < 0.5 * tol:
            break
        if n > 2 * MAX_TERMS:
            capped[0] = 1
            break
    bound[0] = up + lo
    if total > 1.0:
        total = 1.0
    return total


def ncx2_cdf(x, double df, lam, double tol=1e-13):
    """Elementwise noncentral chi-square CDF.

    Returns ``(values, max_tail_bound, capped)``.
    """
    xb, lb = np.broadcast_arrays(np.asarray(x, dtype=np.float64),
                                 np.asarray(lam, dtype=np.float64))
    shape = xb.shape
    cdef double[::1] xv = np.ascontiguousarray(xb, dtype=np.float64).ravel()
    cdef double[::1] lv = np.ascontiguousarray(lb, dtype=np.float64).ravel()
    out = np.empty(xv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double b, worst = 0.0, half_df = 0.5 * df
    cdef int cap, any_cap = 0
    with nogil:
        for i in range(n):
            ov[i] = ncx2_scalar(xv[i], half_df, 0.5 * lv[i], tol, &b, &cap)
            if b > worst:
                worst = b
            any_cap |= cap
    return out.reshape(shape), worst, bool(any_cap)


def simulate_runs(int dims, double r, double H, double w, double h_short,
                  double h_long, double delta, uint64_t seed,
                  int64_t rep_start, int64_t rep_count, int64_t max_samples):
    """Zero-state run lengths of the reduced MEWMA chart.

    Replication ``k`` draws from the SplitMix64 stream keyed by
    ``(seed, k)``; draw ``c`` (1-based) of that stream is the
    standard normal ``ndtri(u_c)``.
    """
    times = np.zeros(rep_count, dtype=np.float64)
    counts = np.zeros(rep_count, dtype=np.int64)
    trunc = np.zeros(rep_count, dtype=np.uint8)
    cdef double[::1] tv = times
    cdef int64_t[::1] cv = counts
    cdef unsigned char[::1] trv = trunc
    cdef double[::1] Wbuf = np.zeros(max(dims, 1), dtype=np.float64)
    cdef double *W = &Wbuf[0]
    cdef double b = (2.0 - r) / r
    cdef double omr = 1.0 - r
    cdef double t, h, q, x, Q
    cdef uint64_t key, ctr
    cdef int64_t rep, n
    cdef int j
    with nogil:
        for rep in range(rep_count):
            key = mix64(seed + <uint64_t>(rep_start + rep + 1) * GAMMA)
            for j in range(dims):
                W[j] = 0.0
            t = 0.0
            h = h_long
            n = 0
            ctr = 0
            while True:
                if n >= max_samples:
                    trv[rep] = 1
                    break
                for j in range(dims):
                    ctr += 1
                    x = ndtri(unit_open(mix64(key + ctr * GAMMA)))
                    if j == 0:
                        x = x + delta
                    W[j] = r * x + omr * W[j]
                t = t + h
                n += 1
                q = W[0] * W[0]
                for j in range(1, dims):
                    q = q + W[j] * W[j]
                Q = b * q
                if Q > H:
                    break
                if Q <= w:
                    h = h_long
                else:
                    h = h_short
            tv[rep] = t
            cv[rep] = n
    return times, counts, trunc.astype(bool)
