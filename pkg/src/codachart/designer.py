"""Optimal and near-optimal design of FSI/VSI MEWMA-CoDa charts.

All searches run on expected-visit vectors.  For fixed ``(r, H)`` the
in-control and out-of-control chains do not depend on ``w`` or on the
sampling intervals, so one linear solve per chain prices every
``(w, h_L)`` candidate: the time to signal is ``h_L * U_L + h_S * U_S`` where
``U_L``/``U_S`` are the expected visits to the safe/warning states.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import brentq

from .errors import DesignError, DomainError, InfeasibleError
from .markov import MarkovSpec, ats_incontrol, incontrol_visits, outofcontrol_visits

TIE_TOL = 1e-9


def noncentrality(mu1_star, mu0_star, sigma_star, n=1):
    """Shift size ``sqrt(n * d^T Sigma^{-1} d)`` for ``d = mu1* - mu0*``."""
    mu1 = np.atleast_1d(np.asarray(mu1_star, dtype=float))
    mu0 = np.atleast_1d(np.asarray(mu0_star, dtype=float))
    S = np.atleast_2d(np.asarray(sigma_star, dtype=float))
    if mu1.shape != mu0.shape or S.shape != (mu1.size, mu1.size):
        raise DomainError("mean vectors and covariance disagree in dimension",
                          mu1=list(mu1.shape), mu0=list(mu0.shape), sigma=list(S.shape))
    if int(n) != n or n < 1:
        raise DomainError("sample size n must be a positive integer", n=n)
    try:
        factor = cho_factor(S)
    except np.linalg.LinAlgError as exc:
        raise DomainError("covariance matrix is not positive definite") from exc
    d = mu1 - mu0
    return float(np.sqrt(max(n * d @ cho_solve(factor, d), 0.0)))


@dataclass(frozen=True)
class Calibration:
    H: float
    arl0: float
    bracket: tuple
    evaluations: int


@lru_cache(maxsize=4096)
def _arl0(p, r, H, m):
    return ats_incontrol(MarkovSpec(p=p, r=r, H=H, m=m)).arl


@lru_cache(maxsize=1024)
def calibrate_H(p, r, target_arl0=200.0, m=30, tol=1e-6, H_max=1e4):
    """Control limit ``H`` giving in-control ARL ``target_arl0`` (1-D chain).

    ARL0 is continuous and increasing in ``H``; a doubling scan brackets
    the root and Brent's method refines it.
    """
    if not target_arl0 > 1:
        raise DesignError("target in-control ARL must exceed 1", target=target_arl0)
    evals = 0

    def f(H):
        nonlocal evals
        evals += 1
        return _arl0(p, r, H, m) - target_arl0

    lo, hi = 0.0, 1.0
    while f(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > H_max:
            raise InfeasibleError("could not bracket H for the target ARL0",
                                  scanned=[0.0, H_max], p=p, r=r, target=target_arl0)
    if lo == 0.0:
        lo = hi
        while f(lo) >= 0:
            lo *= 0.5
            if lo < 1e-10:
                raise InfeasibleError("could not bracket H for the target ARL0",
                                      scanned=[lo, hi], p=p, r=r, target=target_arl0)
        hi = 2.0 * lo
    H = brentq(f, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    arl = _arl0(p, r, H, m)
    if abs(arl - target_arl0) > tol:
        raise InfeasibleError("H calibration did not converge", H=H, arl0=arl, target=target_arl0)
    return Calibration(H=H, arl0=arl, bracket=(lo, hi), evaluations=evals)


@lru_cache(maxsize=2048)
def _incontrol(p, r, H, m):
    u, centers, diag = incontrol_visits(MarkovSpec(p=p, r=r, H=H, m=m))
    return u, centers, diag


@lru_cache(maxsize=2048)
def _outofcontrol(p, r, H, delta, m):
    u, a, diag = outofcontrol_visits(MarkovSpec(p=p, r=r, H=H, delta=delta, m1=m, m2=m))
    return u, a, diag


def _split_incontrol(u0, centers, uwl):
    uwl = np.atleast_1d(uwl)
    safe = centers[None, :] <= uwl[:, None]
    UL = (u0[None, :] * safe).sum(axis=1)
    return UL, u0.sum() - UL


def _split_outofcontrol(u1, a, uwl):
    uwl = np.atleast_1d(uwl)
    safe = a[None, :] <= (uwl ** 2)[:, None]
    UL = (u1[None, :] * safe).sum(axis=1)
    return UL, u1.sum() - UL


def _long_interval(UL0, US0, h_S, target_e0h):
    # (t*N - h_S*U_S)/U_L rearranged so that h_S == t gives exactly t
    return target_e0h + (target_e0h - h_S) * US0 / UL0


def solve_hL(p, r, H, w, h_S, target_e0h=1.0, m=30):
    """Long interval that makes the in-control average interval ``target_e0h``.

    E0(h) is linear in ``h_L`` given the expected safe/warning visit counts
    of the in-control chain.
    """
    if not 0 < w < H:
        raise DesignError("warning limit must satisfy 0 < w < H", w=w, H=H)
    b = (2.0 - r) / r
    u0, centers, _ = _incontrol(p, r, H, m)
    UL, US = _split_incontrol(u0, centers, np.sqrt(w / b))
    h_L = float(_long_interval(UL[0], US[0], h_S, target_e0h))
    if h_L < h_S:
        raise InfeasibleError("required long interval is shorter than h_S; raise w",
                              h_L=h_L, h_S=h_S, w=w)
    return h_L


@dataclass(frozen=True)
class DesignProblem:
    """Inputs of a VSI design search (reduced model, known delta)."""

    p: int
    delta: float
    h_S: float
    n: int = 1
    target_ats0: float = 200.0
    target_e0h: float = 1.0
    r_min: float = 0.05
    ratio: float | None = None
    r_step: float = 0.01
    r_refine: float = 0.001
    w_points: int = 60
    m: int = 30

    def __post_init__(self):
        problems = []
        if int(self.p) != self.p or self.p < 2:
            problems.append("p must be an integer >= 2")
        if int(self.n) != self.n or self.n < 1:
            problems.append("n must be a positive integer")
        if not self.target_ats0 > 1:
            problems.append("target_ats0 must exceed 1")
        if not 0 < self.h_S < self.target_e0h:
            problems.append("h_S must lie in (0, target E0(h))")
        if not self.delta > 0:
            problems.append("delta must be positive")
        if not 0 < self.r_min <= 1:
            problems.append("r_min must lie in (0, 1]")
        if self.ratio is not None and not 0 < self.ratio < 1:
            problems.append("ratio R must lie in (0, 1)")
        if not (self.r_step > 0 and self.r_refine > 0 and self.w_points >= 2):
            problems.append("grid resolutions must be positive")
        if int(self.m) != self.m or self.m < 5:
            problems.append("m must be an integer >= 5")
        if problems:
            raise DesignError("invalid design problem: " + "; ".join(problems), violations=problems)


@dataclass(frozen=True)
class DesignSolution:
    r_star: float
    H_star: float
    w_star: float
    uwl: float
    h_L_star: float
    ats0: float
    e0_h: float
    ats1: float
    provenance: str
    trace: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class FsiSolution:
    r_star: float
    H_star: float
    arl1: float
    arl0: float
    trace: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _pmap(fn, items, threads):
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _r_grid(r_min, step, lo=None, hi=None):
    lo = r_min if lo is None else max(lo, r_min)
    hi = 1.0 if hi is None else min(hi, 1.0)
    n = int(np.floor((hi - lo) / step + 1e-9))
    grid = np.round(lo + step * np.arange(n + 1), 10)
    return [float(r) for r in grid if r_min - 1e-12 <= r <= 1.0 + 1e-12]


def _argmin(values):
    """Index of the smallest value; ties within TIE_TOL go to the earliest."""
    best = None
    for k, v in enumerate(values):
        if v is None:
            continue
        if best is None or v < values[best] - TIE_TOL:
            best = k
    return best


def _search_r(score, problem, threads):
    coarse = _r_grid(problem.r_min, problem.r_step)
    results = _pmap(score, coarse, threads)
    k = _argmin([res[0] for res in results])
    if k is None:
        return None, coarse, results
    r0 = coarse[k]
    fine = _r_grid(problem.r_min, problem.r_refine, r0 - problem.r_step, r0 + problem.r_step)
    fine_results = _pmap(score, fine, threads)
    grid = coarse + fine
    allres = results + fine_results
    # smallest r among ties
    order = sorted(range(len(grid)), key=lambda i: grid[i])
    vals = [allres[i][0] for i in order]
    j = _argmin(vals)
    return order[j], grid, allres


def optimize_fsi(p, delta, target_arl0=200.0, r_min=0.05, r_step=0.01, r_refine=0.001,
                 m=30, threads=1):
    """FSI chart minimizing ARL1 at ``delta`` with ARL0 fixed by calibration."""
    problem = DesignProblem(p=p, delta=delta, h_S=0.5, target_ats0=target_arl0, r_min=r_min,
                            r_step=r_step, r_refine=r_refine, m=m)

    def score(r):
        cal = calibrate_H(p, r, target_arl0, m)
        u1, _, diag = _outofcontrol(p, r, cal.H, float(delta), m)
        return float(u1.sum()), cal, diag

    k, grid, results = _search_r(score, problem, threads)
    arl1, cal, diag = results[k]
    return FsiSolution(r_star=grid[k], H_star=cal.H, arl1=arl1, arl0=cal.arl0,
                       trace={"r_evaluations": len(grid), "residual": diag["residual"]})


def _w_grid(problem, H):
    return np.geomspace(0.05, 0.98 * H, problem.w_points)


def _breakpoint_refinement(w_lo, w_hi, b, centers, a):
    """Interior points of every region plateau between ``w_lo`` and ``w_hi``.

    The search objective only changes where a state centre crosses the
    warning limit, so one point per plateau covers the bracket exactly.
    """
    bp = np.concatenate([b * centers ** 2, b * a])
    bp = np.unique(bp[(bp > w_lo) & (bp < w_hi)])
    knots = np.concatenate([[w_lo], bp, [w_hi]])
    return 0.5 * (knots[:-1] + knots[1:])


def _best_w(problem, r, H, u0, centers, u1, a):
    """Return ``(ats1, w, h_L, infeasible_count)`` minimizing ATS1 over w."""
    b = (2.0 - r) / r
    h_S, tgt = problem.h_S, problem.target_e0h

    def evaluate(ws):
        uwl = np.sqrt(ws / b)
        UL0, US0 = _split_incontrol(u0, centers, uwl)
        hL = _long_interval(UL0, US0, h_S, tgt)
        UL1, US1 = _split_outofcontrol(u1, a, uwl)
        ats1 = hL * UL1 + h_S * US1
        feasible = hL >= h_S
        return ats1, hL, feasible

    if problem.ratio is not None:
        ws = np.array([problem.ratio ** 2 * H])
        ats1, hL, ok = evaluate(ws)
        if not ok[0]:
            return None, None, None, 1
        return float(ats1[0]), float(ws[0]), float(hL[0]), 0

    ws = _w_grid(problem, H)
    ats1, hL, ok = evaluate(ws)
    infeasible = int((~ok).sum())
    vals = [float(v) if f else None for v, f in zip(ats1, ok)]
    k = _argmin(vals)
    if k is None:
        return None, None, None, infeasible
    lo = ws[k - 1] if k > 0 else ws[0]
    hi = ws[k + 1] if k + 1 < ws.size else ws[-1]
    extra = _breakpoint_refinement(lo, hi, b, centers, a)
    cand = np.concatenate([ws, extra])
    order = np.argsort(cand, kind="stable")
    cand = cand[order]
    ats1, hL, ok = evaluate(cand)
    vals = [float(v) if f else None for v, f in zip(ats1, ok)]
    k = _argmin(vals)
    return vals[k], float(cand[k]), float(hL[k]), infeasible


def _finalize(problem, r, H, w, h_L, ats1, provenance, trace):
    spec = MarkovSpec(p=problem.p, r=r, H=H, w=w, h_S=problem.h_S, h_L=h_L, m=problem.m)
    rep = ats_incontrol(spec)
    if abs(rep.ats - problem.target_ats0) > 0.5 or abs(rep.e_h - problem.target_e0h) > 1e-6:
        raise InfeasibleError("solution fails the in-control constraints on re-evaluation",
                              ats0=rep.ats, e0_h=rep.e_h)
    return DesignSolution(r_star=r, H_star=H, w_star=w, uwl=float(spec.uwl), h_L_star=h_L,
                          ats0=rep.ats, e0_h=rep.e_h, ats1=ats1, provenance=provenance,
                          trace=trace)


def optimize_vsi(problem, threads=1):
    """Jointly optimal ``(r, H, w, h_L)`` minimizing ATS1 under ATS0 and E0(h)."""
    p, m, delta = problem.p, problem.m, float(problem.delta)

    def score(r):
        cal = calibrate_H(p, r, problem.target_ats0, m)
        u0, centers, _ = _incontrol(p, r, cal.H, m)
        u1, a, diag = _outofcontrol(p, r, cal.H, delta, m)
        ats1, w, hL, infeasible = _best_w(problem, r, cal.H, u0, centers, u1, a)
        return ats1, (cal.H, w, hL, infeasible, diag["residual"])

    k, grid, results = _search_r(score, problem, threads)
    infeasible = sum(res[1][3] for res in results)
    if k is None:
        raise InfeasibleError("no (r, w) candidate satisfies E0(h) with h_L >= h_S",
                              most_common_failure="h_L < h_S", infeasible_candidates=infeasible)
    ats1, (H, w, hL, _, residual) = results[k]
    trace = {"r_evaluations": len(grid), "infeasible_w": infeasible, "residual": residual,
             "mode": "ratio" if problem.ratio is not None else "free-w"}
    return _finalize(problem, grid[k], H, w, hL, ats1, "full-optimal", trace)


def near_optimal_vsi(r_star, H_star, problem):
    """Search ``w`` (and the implied ``h_L``) at fixed FSI-optimal ``(r*, H*)``."""
    p, m = problem.p, problem.m
    arl0 = _arl0(p, float(r_star), float(H_star), m)
    if abs(arl0 - problem.target_ats0) > 0.5:
        raise DesignError("(r*, H*) does not meet the in-control target", arl0=arl0,
                          target=problem.target_ats0)
    u0, centers, _ = _incontrol(p, float(r_star), float(H_star), m)
    u1, a, diag = _outofcontrol(p, float(r_star), float(H_star), float(problem.delta), m)
    ats1, w, hL, infeasible = _best_w(problem, r_star, H_star, u0, centers, u1, a)
    if ats1 is None:
        raise InfeasibleError("no warning limit satisfies E0(h) with h_L >= h_S",
                              most_common_failure="h_L < h_S", infeasible_candidates=infeasible)
    trace = {"infeasible_w": infeasible, "residual": diag["residual"],
             "mode": "ratio" if problem.ratio is not None else "free-w"}
    return _finalize(problem, float(r_star), float(H_star), w, hL, ats1, "near-optimal", trace)


def vsi_ats1(p, r, H, w, h_S, h_L, delta, m=30):
    """ATS1 of a given VSI design from the cached visit vectors."""
    b = (2.0 - r) / r
    u1, a, _ = _outofcontrol(p, r, H, float(delta), m)
    UL1, US1 = _split_outofcontrol(u1, a, np.sqrt(w / b))
    return float(h_L * UL1[0] + h_S * US1[0])
