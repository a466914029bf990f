"""NumPy fallback for the compiled kernels in ``_kernels.pyx``.

``simulate_runs`` advances every live replication in lockstep and is
bit-identical to the compiled loop.  ``ncx2_cdf`` sums a Poisson window
around each mode instead of walking outward term by term; results agree
with the compiled series to ~1e-14.
"""

import numpy as np
from scipy.special import gammainc, gammaln, ndtri, pdtr, pdtrc

BACKEND = "python"

GAMMA = 0x9E3779B97F4A7C15
MASK = (1 << 64) - 1
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_INV53 = 2.0 ** -53


def mix64(z):
    z = (z ^ (z >> _S30)) * _C1
    z = (z ^ (z >> _S27)) * _C2
    return z ^ (z >> _S31)


def stream_keys(seed, rep_start, rep_count):
    reps = np.arange(rep_start + 1, rep_start + rep_count + 1, dtype=np.uint64)
    return mix64(np.uint64(seed & MASK) + reps * np.uint64(GAMMA))


def normals(keys, counter):
    """Draw number ``counter`` (1-based) from each keyed stream."""
    u = mix64(keys + np.uint64((counter * GAMMA) & MASK))
    return ndtri(((u >> _S11).astype(np.float64) + 0.5) * _INV53)


def _window_cdf(x, half_df, mu, half_width):
    k0 = np.floor(mu)
    offsets = np.arange(-half_width, half_width + 1, dtype=np.float64)
    k = k0[:, None] + offsets[None, :]
    valid = k >= 0
    k = np.where(valid, k, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.where(mu[:, None] > 0, k * np.log(mu[:, None]), np.where(k == 0, 0.0, -np.inf))
    logw = logw - mu[:, None] - gammaln(k + 1.0)
    terms = np.where(valid, np.exp(logw) * gammainc(half_df + k, 0.5 * x[:, None]), 0.0)
    lo = k0 - half_width
    hi = k0 + half_width
    p_hi = gammainc(half_df + hi + 1.0, 0.5 * x)
    bound = np.where(lo > 0, pdtr(lo - 1, mu), 0.0) + pdtrc(hi, mu) * p_hi
    return terms.sum(axis=1), bound


def ncx2_cdf(x, df, lam, tol=1e-13):
    """Elementwise noncentral chi-square CDF; returns ``(values, max_tail_bound, capped)``."""
    xb, lb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(lam, dtype=float))
    shape = xb.shape
    xv = xb.ravel()
    mu = 0.5 * lb.ravel()
    half_df = 0.5 * float(df)
    out = np.zeros(xv.shape)
    inside = (xv > 0) & np.isfinite(xv)
    out[np.isinf(xv) & (xv > 0)] = 1.0
    worst = 0.0
    capped = False
    if inside.any():
        xi, mi = xv[inside], mu[inside]
        half_width = int(np.ceil(12 + 9 * np.sqrt(mi.max())))
        while True:
            vals, bound = _window_cdf(xi, half_df, mi, half_width)
            worst = float(bound.max())
            if worst < tol:
                break
            if half_width > 100000:
                capped = True
                break
            half_width *= 2
        out[inside] = np.minimum(vals, 1.0)
    return out.reshape(shape), worst, capped


def simulate_runs(dims, r, H, w, h_short, h_long, delta, seed, rep_start, rep_count, max_samples):
    """Zero-state run lengths; same contract as the compiled kernel."""
    keys = stream_keys(seed, rep_start, rep_count)
    b = (2.0 - r) / r
    omr = 1.0 - r
    W = np.zeros((rep_count, dims))
    times = np.zeros(rep_count)
    counts = np.zeros(rep_count, dtype=np.int64)
    trunc = np.zeros(rep_count, dtype=bool)
    h = np.full(rep_count, float(h_long))
    alive = np.arange(rep_count)
    step = 0
    while alive.size:
        if step >= max_samples:
            trunc[alive] = True
            break
        k = alive
        ka = keys[k]
        for j in range(dims):
            x = normals(ka, step * dims + j + 1)
            if j == 0:
                x = x + delta
            W[k, j] = r * x + omr * W[k, j]
        times[k] = times[k] + h[k]
        counts[k] += 1
        Wk = W[k]
        q = Wk[:, 0] * Wk[:, 0]
        for j in range(1, dims):
            q = q + Wk[:, j] * Wk[:, j]
        Q = b * q
        h[k] = np.where(Q <= w, h_long, h_short)
        alive = k[~(Q > H)]
        step += 1
    return times, counts, trunc
