"""Zero-state ATS, ARL and E(h) of FSI/VSI MEWMA charts by Markov chains.

Works in the reduced model (n = 1, in-control mean 0, identity
covariance) where the chart statistic is ``Q = b * ||W||^2`` with
``b = (2 - r) / r`` and the control region is ``||W|| <= UCL'`` with
``UCL' = sqrt(H / b)``.

In control, ``||W||`` is discretized on ``[0, UCL']`` into ``m + 1``
states (a half-width first cell, then width ``g``) whose transitions are
noncentral chi-square probabilities.  Out of control, the shifted first
coordinate gets its own ``2*m1 + 1`` state chain on ``[-UCL', UCL']``
and the norm of the remaining ``p - 2`` coordinates an ``m2 + 1`` state
chain; the joint chain is their Kronecker product restricted to states
inside the control region.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .errors import DesignError, NumericalError
from .special import ncx2_cdf_bounded, std_normal_cdf


@dataclass(frozen=True)
class MarkovSpec:
    """Reduced chart scalars plus grid resolutions.

    ``w=None`` means no warning limit (every transient state is safe),
    which is the FSI chart when combined with ``h_S == h_L``.
    """

    p: int
    r: float
    H: float
    w: float | None = None
    h_S: float = 1.0
    h_L: float = 1.0
    delta: float = 0.0
    m: int = 30
    m1: int = 30
    m2: int = 30

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
        if not (self.delta >= 0 and np.isfinite(self.delta)):
            problems.append("delta must be finite and nonnegative")
        for name in ("m", "m1", "m2"):
            v = getattr(self, name)
            if int(v) != v or v < 5:
                problems.append(f"{name} must be an integer >= 5")
        if problems:
            raise DesignError("invalid Markov chain specification: " + "; ".join(problems),
                              violations=problems)

    @property
    def dims(self):
        return self.p - 1

    @property
    def b(self):
        return (2.0 - self.r) / self.r

    @property
    def ucl(self):
        """Control limit on ``||W||``."""
        return np.sqrt(self.H / self.b)

    @property
    def uwl(self):
        """Warning limit on ``||W||`` (equal to ``ucl`` without a warning limit)."""
        return self.ucl if self.w is None else np.sqrt(self.w / self.b)

    @property
    def g(self):
        return 2.0 * self.ucl / (2 * self.m + 1)

    @property
    def g1(self):
        return 2.0 * self.ucl / (2 * self.m1 + 1)

    @property
    def g2(self):
        return 2.0 * self.ucl / (2 * self.m2 + 1)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TransitionModel:
    """Matrices of one chain.

    For the in-control chain only ``P1`` is set among the component
    matrices and ``P`` is ``P1``.  For the out-of-control chain ``T`` is the
    ``(2*m1+1, m2+1)`` transient mask and ``P = P2 * outer(t, t)`` with ``t``
    the flattened mask.
    """

    kind: str
    P: np.ndarray
    h_vec: np.ndarray
    s: np.ndarray
    transient: np.ndarray
    P1: np.ndarray | None = None
    Hmat: np.ndarray | None = None
    V: np.ndarray | None = None
    P2: np.ndarray | None = None
    T: np.ndarray | None = None
    tail_bound: float = 0.0
    series_capped: bool = False

    @property
    def start_index(self):
        return int(np.flatnonzero(self.s)[0])


@dataclass(frozen=True)
class AtsReport:
    ats: float
    arl: float
    e_h: float
    inputs: MarkovSpec
    chain: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "ats": self.ats,
            "arl": self.arl,
            "e_h": self.e_h,
            "chain": self.chain,
            "inputs": self.inputs.to_dict(),
            "diagnostics": dict(self.diagnostics),
        }


def norm_chain(df, r, ucl, m):
    """Transition matrix of the ``||W||`` chain with ``df`` dimensions.

    State 0 is ``[0, g/2)``, state ``j >= 1`` is ``[(j-1/2)g, (j+1/2)g)``
    with ``g = 2*ucl/(2m+1)``; from state ``i`` the scaled new norm
    ``||W'||^2 / r^2`` is chi-square with noncentrality ``((1-r)*i*g/r)^2``.
    Row deficits are the signal probabilities.

    Returns ``(matrix, tail_bound, capped)``.
    """
    g = 2.0 * ucl / (2 * m + 1)
    idx = np.arange(m + 1, dtype=float)
    lam = ((1.0 - r) * idx * g / r) ** 2
    edges = ((idx + 0.5) * g / r) ** 2
    C, bound, capped = ncx2_cdf_bounded(edges[None, :], df, lam[:, None])
    P = np.diff(C, axis=1, prepend=0.0)
    np.clip(P, 0.0, 1.0, out=P)
    return P, bound, capped


def shifted_chain(r, ucl, m1, delta):
    """Transition matrix of the shifted coordinate on ``[-ucl, ucl]``."""
    g1 = 2.0 * ucl / (2 * m1 + 1)
    i = np.arange(1, 2 * m1 + 2, dtype=float)
    centers = -ucl + (i - 0.5) * g1
    edges = -ucl + np.arange(0, 2 * m1 + 2, dtype=float) * g1
    z = (edges[None, :] - (1.0 - r) * centers[:, None]) / r - delta
    return np.diff(std_normal_cdf(z), axis=1)


def incontrol_intervals(spec):
    centers = np.arange(spec.m + 1) * spec.g
    return np.where(centers <= spec.uwl, spec.h_L, spec.h_S)


def build_incontrol_chain(spec):
    """One-dimensional chain on ``||W||`` (``delta`` is ignored)."""
    P1, bound, capped = norm_chain(spec.dims, spec.r, spec.ucl, spec.m)
    s = np.zeros(spec.m + 1)
    s[0] = 1.0
    return TransitionModel(
        kind="1d",
        P=P1,
        P1=P1,
        h_vec=incontrol_intervals(spec),
        s=s,
        transient=np.ones(spec.m + 1, dtype=bool),
        tail_bound=bound,
        series_capped=capped,
    )


def _grid_squared_norms(spec, n_beta):
    alpha = np.arange(1, 2 * spec.m1 + 2) - (spec.m1 + 1)
    beta = np.arange(n_beta)
    return (alpha[:, None] * spec.g1) ** 2 + (beta[None, :] * spec.g2) ** 2


def _component_chains(spec):
    Hmat = shifted_chain(spec.r, spec.ucl, spec.m1, spec.delta)
    if spec.p > 2:
        V, bound, capped = norm_chain(spec.p - 2, spec.r, spec.ucl, spec.m2)
    else:
        # no in-control coordinates: ||W2|| is identically zero
        V, bound, capped = np.ones((1, 1)), 0.0, False
    return Hmat, V, bound, capped


def build_outofcontrol_chain(spec):
    """Two-dimensional Kronecker chain (shifted coordinate x remaining norm).

    Flat state ``(alpha, beta)`` (1-based alpha, 0-based beta) sits at
    0-based index ``(alpha-1)*(m2+1) + beta``; the start state is
    ``(m1+1, 0)``.  For ``p == 2`` the second factor is the single state 0.
    """
    Hmat, V, bound, capped = _component_chains(spec)
    n_beta = V.shape[0]
    a = _grid_squared_norms(spec, n_beta)
    ucl2, uwl2 = spec.ucl ** 2, spec.uwl ** 2
    T = (a <= ucl2).astype(float)
    t = T.ravel()
    P2 = np.kron(Hmat, V)
    P = P2 * np.outer(t, t)
    h_vec = np.where(a <= uwl2, spec.h_L, np.where(a <= ucl2, spec.h_S, 0.0)).ravel()
    s = np.zeros(P2.shape[0])
    s[spec.m1 * n_beta] = 1.0
    return TransitionModel(
        kind="2d",
        P=P,
        Hmat=Hmat,
        V=V,
        P2=P2,
        T=T,
        h_vec=h_vec,
        s=s,
        transient=t.astype(bool),
        tail_bound=bound,
        series_capped=capped,
    )


def _visits(P, start):
    """Expected visits to each state before absorption, ``s^T (I - P)^{-1}``."""
    n = P.shape[0]
    A = np.eye(n) - P
    s = np.zeros(n)
    s[start] = 1.0
    try:
        lu = scipy.linalg.lu_factor(A.T, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError("I - P is singular; the chain has no absorption") from exc
    u = scipy.linalg.lu_solve(lu, s, check_finite=False)
    if not np.all(np.isfinite(u)):
        raise NumericalError("I - P is singular; the chain has no absorption")
    residual = float(np.abs(A.T @ u - s).max())
    return u, residual


def incontrol_visits(spec):
    """Expected visits per state of the 1-D chain and the state centres.

    Returns ``(visits, centers, diagnostics)``.
    """
    P1, bound, capped = norm_chain(spec.dims, spec.r, spec.ucl, spec.m)
    u, residual = _visits(P1, 0)
    centers = np.arange(spec.m + 1) * spec.g
    return u, centers, {"residual": residual, "series_tail_bound": bound, "series_capped": capped}


def outofcontrol_visits(spec):
    """Expected visits to the transient states of the 2-D chain.

    Builds only the transient block (the Kronecker product restricted to
    the control region), so it is cheaper than :func:`build_outofcontrol_chain`
    followed by a full solve.  Returns ``(visits, squared_norms, diagnostics)``
    over transient states in flat order.
    """
    Hmat, V, bound, capped = _component_chains(spec)
    n_beta = V.shape[0]
    a = _grid_squared_norms(spec, n_beta).ravel()
    idx = np.flatnonzero(a <= spec.ucl ** 2)
    ai, bi = np.divmod(idx, n_beta)
    P = Hmat[np.ix_(ai, ai)] * V[np.ix_(bi, bi)]
    start = int(np.searchsorted(idx, spec.m1 * n_beta))
    u, residual = _visits(P, start)
    return u, a[idx], {"residual": residual, "series_tail_bound": bound,
                       "series_capped": capped, "transient_states": int(idx.size)}


def _report(spec, u, h, chain, diag):
    # same summation order for both totals, so h == 1 gives ats == arl exactly
    arl = float(np.sum(u))
    ats = float(np.sum(u * h))
    if not (arl > 0 and np.isfinite(arl) and np.isfinite(ats)):
        raise NumericalError("run-length solve produced a non-finite value", arl=arl, ats=ats)
    return AtsReport(ats=ats, arl=arl, e_h=ats / arl, inputs=spec, chain=chain, diagnostics=diag)


def ats_incontrol(spec):
    """Zero-state ATS/ARL/E(h) from the one-dimensional chain."""
    u, centers, diag = incontrol_visits(spec)
    h = np.where(centers <= spec.uwl, spec.h_L, spec.h_S)
    return _report(spec, u, h, "1d", diag)


def ats_outofcontrol(spec):
    """Zero-state ATS/ARL/E(h) from the two-dimensional chain."""
    u, a, diag = outofcontrol_visits(spec)
    h = np.where(a <= spec.uwl ** 2, spec.h_L, spec.h_S)
    return _report(spec, u, h, "2d", diag)


def evaluate(spec):
    """In-control chain for ``delta == 0``, Kronecker chain otherwise."""
    return ats_incontrol(spec) if spec.delta == 0 else ats_outofcontrol(spec)
