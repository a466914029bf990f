"""Monte Carlo estimates of zero-state ATS/ARL/E(h) for the reduced chart.

Simulates ``W_i = r X_i + (1 - r) W_{i-1}`` with ``X_i ~ N((delta, 0, ...), I)``
directly, independent of the Markov discretization.  Replication ``k``
draws from its own SplitMix64 stream keyed by ``(seed, k)`` and converts
uniforms to normals by inversion, so estimates do not depend on the
kernel backend, chunking or thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .errors import DesignError

RNG_NAME = "splitmix64-counter/inversion"
MIN_REPORTABLE = 1000


@dataclass(frozen=True)
class SimConfig:
    p: int
    r: float
    H: float
    seed: int
    w: float | None = None
    h_S: float = 1.0
    h_L: float = 1.0
    delta: float = 0.0
    replications: int = 100_000
    max_samples: int = 10_000_000

    def __post_init__(self):
        problems = []
        if int(self.p) != self.p or self.p < 2:
            problems.append("p must be an integer >= 2")
        if not 0 < self.r <= 1:
            problems.append("r must lie in (0, 1]")
        if not self.H > 0:
            problems.append("H must be positive")
        if self.w is not None and not 0 < self.w < self.H:
            problems.append("w must satisfy 0 < w < H")
        if not 0 < self.h_S <= self.h_L:
            problems.append("intervals must satisfy 0 < h_S <= h_L")
        if not self.delta >= 0:
            problems.append("delta must be nonnegative")
        if self.seed is None or int(self.seed) != self.seed or self.seed < 0:
            problems.append("seed must be a nonnegative integer")
        if int(self.replications) != self.replications or self.replications < 1:
            problems.append("replications must be a positive integer")
        if int(self.max_samples) != self.max_samples or self.max_samples < 1:
            problems.append("max_samples must be a positive integer")
        if problems:
            raise DesignError("invalid simulation config: " + "; ".join(problems),
                              violations=problems)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SimEstimate:
    ats: float
    arl: float
    e_h: float
    ats_se: float
    arl_se: float
    e_h_se: float
    replications: int
    truncated: int
    rng: str = RNG_NAME
    backend: str = ""

    @property
    def flagged(self):
        return self.truncated > 0

    @property
    def reportable(self):
        return self.replications >= MIN_REPORTABLE and not self.flagged

    def to_dict(self):
        d = asdict(self)
        d["flagged"] = self.flagged
        d["reportable"] = self.reportable
        return d


def run_lengths(config, threads=1, backend=None, chunk=1 << 16):
    """Per-replication ``(times, sample_counts, truncated)`` arrays."""
    impl = kernels.get_backend(backend)
    w = config.H if config.w is None else config.w
    starts = list(range(0, config.replications, chunk))

    def job(start):
        count = min(chunk, config.replications - start)
        return impl.simulate_runs(config.p - 1, float(config.r), float(config.H), float(w),
                                  float(config.h_S), float(config.h_L), float(config.delta),
                                  int(config.seed), start, count, int(config.max_samples))

    if threads and threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, starts))
    else:
        parts = [job(s) for s in starts]
    return tuple(np.concatenate([part[k] for part in parts]) for k in range(3))


def simulate_ats(config, threads=1, backend=None):
    """Estimate ATS, ARL and E(h) with standard errors."""
    impl = kernels.get_backend(backend)
    t, n, trunc = run_lengths(config, threads=threads, backend=backend)
    N = t.size
    n = n.astype(float)
    ats, arl = float(t.mean()), float(n.mean())
    e_h = ats / arl
    ddof = 1 if N > 1 else 0
    ats_se = float(t.std(ddof=ddof) / np.sqrt(N))
    arl_se = float(n.std(ddof=ddof) / np.sqrt(N))
    # delta method for the ratio of means
    e_h_se = float((t - e_h * n).std(ddof=ddof) / (arl * np.sqrt(N)))
    return SimEstimate(ats=ats, arl=arl, e_h=e_h, ats_se=ats_se, arl_se=arl_se, e_h_se=e_h_se,
                       replications=N, truncated=int(trunc.sum()), backend=impl.BACKEND)
