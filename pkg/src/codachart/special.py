"""Distribution functions needed by the Markov-chain transition matrices."""

import numpy as np
from scipy.special import erfc

from . import kernels
from .errors import DomainError

SERIES_TOL = 1e-13
_RSQRT2 = 0.7071067811865476


def std_normal_cdf(z):
    """Standard normal CDF via the complementary error function."""
    z = np.asarray(z, dtype=float)
    out = 0.5 * erfc(-z * _RSQRT2)
    return float(out) if out.ndim == 0 else out


def ncx2_cdf_bounded(x, df, lam, tol=SERIES_TOL):
    """Noncentral chi-square CDF plus the series truncation bound.

    Poisson(lam/2) mixture of central chi-square CDFs (regularized lower
    incomplete gamma), summed outward from the Poisson mode until the
    remaining tail mass is below ``tol``.

    Returns
    -------
    values : float or ndarray
    tail_bound : float
        Largest truncation bound over all evaluated points.
    capped : bool
        True if the term cap was reached before ``tol``.
    """
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if not df > 0:
        raise DomainError("degrees of freedom must be positive", df=df)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise DomainError("chi-square quantile must be nonnegative")
    if np.any(~np.isfinite(lam)) or np.any(lam < 0):
        raise DomainError("noncentrality must be finite and nonnegative")
    vals, bound, capped = kernels.ncx2_cdf(x, float(df), lam, tol)
    if vals.ndim == 0:
        vals = float(vals)
    return vals, bound, capped


def noncentral_chi2_cdf(x, df, lam):
    """P(chi2(df, lam) <= x)."""
    return ncx2_cdf_bounded(x, df, lam)[0]
