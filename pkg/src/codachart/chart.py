"""Online VSI MEWMA chart for compositional observations.

Each sampling period's compositions are mapped to ilr coordinates and
averaged; the MEWMA vector of the centred mean is monitored with the
asymptotic-covariance statistic ``Q = n*b * W^T (Sigma*)^{-1} W``.
``Q <= w`` is the safe region (next interval ``h_L``), ``w < Q <= H`` the
warning region (``h_S``) and ``Q > H`` a signal.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ChartStateError, DesignError, DomainError
from .simplex import Composition, IlrBasis, clr, ilr, ilr_inv, neutral, sbp_basis

PD_TOL = 1e-12


class Region(str, Enum):
    SAFE = "safe"
    WARNING = "warning"
    SIGNAL = "signal"


def classify(Q, w, H):
    if Q > H:
        return Region.SIGNAL
    if Q > w:
        return Region.WARNING
    return Region.SAFE


@dataclass(frozen=True, eq=False)
class ChartDesign:
    """Complete chart parameterization.

    ``mu0`` is the in-control centre on the simplex and ``sigma_star`` the
    covariance of single-observation ilr coordinates under ``basis``.
    """

    p: int
    n: int
    r: float
    H: float
    w: float
    h_S: float
    h_L: float
    mu0: Composition
    sigma_star: np.ndarray
    basis: IlrBasis

    def __post_init__(self):
        problems = []
        if int(self.p) != self.p or self.p < 2:
            problems.append("p must be an integer >= 2")
        if int(self.n) != self.n or self.n < 1:
            problems.append("n must be a positive integer")
        if not 0 < self.r <= 1:
            problems.append("r must lie in (0, 1]")
        if not 0 < self.w < self.H:
            problems.append("limits must satisfy 0 < w < H")
        if not 0 < self.h_S <= self.h_L:
            problems.append("intervals must satisfy 0 < h_S <= h_L")
        mu0 = self.mu0 if isinstance(self.mu0, Composition) else Composition(self.mu0)
        if mu0.p != self.p:
            problems.append("mu0 must have p parts")
        if self.basis.p != self.p:
            problems.append("basis must be built for p parts")
        S = np.array(self.sigma_star, dtype=float)
        factor = None
        if S.shape != (self.p - 1, self.p - 1):
            problems.append("sigma_star must be (p-1) x (p-1)")
        elif not np.allclose(S, S.T, rtol=0, atol=1e-12 * max(1.0, np.abs(S).max())):
            problems.append("sigma_star must be symmetric")
        elif not np.linalg.eigvalsh(S).min() > PD_TOL:
            problems.append("sigma_star must be positive definite")
        else:
            factor = cho_factor(S)
        if problems:
            raise DesignError("invalid chart design: " + "; ".join(problems), violations=problems)
        S.flags.writeable = False
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "sigma_star", S)
        object.__setattr__(self, "_factor", factor)
        mu0_star = ilr(mu0, self.basis)
        mu0_star.flags.writeable = False
        object.__setattr__(self, "mu0_star", mu0_star)

    @classmethod
    def reduced(cls, p, r, H, w, h_S, h_L, n=1):
        """Design with neutral centre and identity ilr covariance."""
        return cls(p=p, n=n, r=r, H=H, w=w, h_S=h_S, h_L=h_L, mu0=neutral(p),
                   sigma_star=np.eye(p - 1), basis=sbp_basis(p))

    @property
    def b(self):
        return (2.0 - self.r) / self.r

    @property
    def ucl(self):
        return float(np.sqrt(self.H / self.b))

    @property
    def uwl(self):
        return float(np.sqrt(self.w / self.b))

    def statistic(self, W):
        """``W^T Sigma_W^{-1} W`` with ``Sigma_W = r/(n(2-r)) Sigma*``."""
        W = np.asarray(W, dtype=float)
        return float(self.n * self.b * (W @ cho_solve(self._factor, W)))

    def __eq__(self, other):
        if not isinstance(other, ChartDesign):
            return NotImplemented
        return self.to_dict() == other.to_dict() and self.basis == other.basis

    def to_dict(self):
        return {
            "p": self.p, "n": self.n, "r": self.r, "H": self.H, "w": self.w,
            "h_S": self.h_S, "h_L": self.h_L,
            "mu0": [float(v) for v in self.mu0.parts],
            "sigma_star": self.sigma_star.tolist(),
            "basis": self.basis.name if self.basis.name == "sbp" else self.basis.contrast.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        missing = [k for k in ("p", "n", "r", "H", "w", "h_S", "h_L") if k not in doc]
        if missing:
            raise DesignError("design document is missing fields", missing=missing)
        p = int(doc["p"])
        basis = doc.get("basis", "sbp")
        basis = sbp_basis(p) if basis == "sbp" else IlrBasis(basis)
        mu0 = doc.get("mu0")
        mu0 = neutral(p) if mu0 is None else Composition(mu0)
        sigma = doc.get("sigma_star")
        sigma = np.eye(p - 1) if sigma is None else np.asarray(sigma, dtype=float)
        return cls(p=p, n=int(doc["n"]), r=float(doc["r"]), H=float(doc["H"]), w=float(doc["w"]),
                   h_S=float(doc["h_S"]), h_L=float(doc["h_L"]), mu0=mu0,
                   sigma_star=sigma, basis=basis)


@dataclass(frozen=True)
class ChartState:
    W: tuple
    t: float
    i: int
    region: Region
    next_interval: float | None
    Q: float = 0.0


@dataclass(frozen=True)
class StepReport:
    i: int
    t: float
    xbar_star: tuple
    W: tuple
    Q: float
    region: Region
    next_interval: float | None

    def to_dict(self):
        return {"i": self.i, "t": self.t, "Q": self.Q, "region": self.region.value,
                "next_interval": self.next_interval}


def init_chart(design):
    """Zero-state chart: ``W = 0`` and the first interval is ``h_L``."""
    if not isinstance(design, ChartDesign):
        raise DesignError("init_chart needs a ChartDesign")
    return ChartState(W=(0.0,) * (design.p - 1), t=0.0, i=0, region=Region.SAFE,
                      next_interval=design.h_L, Q=0.0)


def _sample_coords(sample, design):
    if isinstance(sample, Composition):
        sample = [sample]
    rows = [np.asarray(x.parts if isinstance(x, Composition) else x, dtype=float) for x in sample]
    if len(rows) != design.n:
        raise DomainError(f"expected {design.n} observations per period, got {len(rows)}",
                          expected=design.n, got=len(rows))
    X = np.vstack(rows) if rows else np.empty((0, design.p))
    if X.shape[1] != design.p:
        raise DomainError(f"observations must have {design.p} parts", got=int(X.shape[1]))
    for k, row in enumerate(X):
        if not np.all(row > 0) or not np.all(np.isfinite(row)):
            raise DomainError(f"observation {k} has a nonpositive or non-finite part", row=k)
    return ilr(X, design.basis)


def update(state, design, sample):
    """Consume one period's ``n`` compositions; returns ``(new_state, StepReport)``."""
    if state.region is Region.SIGNAL:
        raise ChartStateError("chart has signalled; reset with init_chart before continuing",
                              i=state.i)
    coords = _sample_coords(sample, design)
    xbar = coords.mean(axis=0)
    W = design.r * (xbar - design.mu0_star) + (1.0 - design.r) * np.asarray(state.W)
    Q = design.statistic(W)
    region = classify(Q, design.w, design.H)
    nxt = {Region.SAFE: design.h_L, Region.WARNING: design.h_S, Region.SIGNAL: None}[region]
    t = state.t + state.next_interval
    W = tuple(float(v) for v in W)
    new = ChartState(W=W, t=t, i=state.i + 1, region=region, next_interval=nxt, Q=Q)
    report = StepReport(i=new.i, t=t, xbar_star=tuple(float(v) for v in xbar), W=W, Q=Q,
                        region=region, next_interval=nxt)
    return new, report


def run_chart(design, periods):
    """Monitor an iterable of periods until the first signal; yields StepReports."""
    state = init_chart(design)
    for sample in periods:
        state, report = update(state, design, sample)
        yield report
        if report.region is Region.SIGNAL:
            return


def estimate_parameters(phase1, basis=None):
    """In-control centre and ilr covariance from Phase I compositions.

    The centre is the inverse ilr of the mean ilr coordinates (the
    compositional centre); the covariance is the unbiased sample
    covariance of the coordinates.
    """
    X = np.asarray([x.parts if isinstance(x, Composition) else x for x in phase1], dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise DomainError("phase I data must be a list of compositions")
    p = X.shape[1]
    basis = sbp_basis(p) if basis is None else basis
    if X.shape[0] < p:
        raise DomainError(f"need at least p={p} observations to estimate a full-rank covariance",
                          rows=int(X.shape[0]), p=p)
    Z = clr(X) @ basis.contrast.T
    mu0 = ilr_inv(Z.mean(axis=0), basis)
    S = np.atleast_2d(np.cov(Z, rowvar=False, ddof=1))
    scale = max(1.0, float(np.abs(S).max()))
    if np.linalg.eigvalsh(S).min() <= PD_TOL * scale:
        raise DomainError("estimated covariance is singular; collect more (or more varied) "
                          "phase I data", min_eigenvalue=float(np.linalg.eigvalsh(S).min()))
    return mu0, S
