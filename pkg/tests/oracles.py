"""Independent reference routes used by the unit and acceptance tests."""

import mpmath as mp
import numpy as np
from scipy import integrate
from scipy.special import ive


def ncx2_density(x, df, lam):
    """Bessel-form noncentral chi-square density (central form when lam == 0)."""
    if x <= 0:
        return 0.0
    if lam == 0:
        return float(mp.exp((df / 2 - 1) * mp.log(x) - x / 2 - (df / 2) * mp.log(2) - mp.loggamma(df / 2)))
    z = np.sqrt(lam * x)
    nu = df / 2 - 1
    return 0.5 * np.exp(-(x + lam) / 2 + z + (df / 4 - 0.5) * np.log(x / lam)) * ive(nu, z)


def ncx2_cdf_quad(x, df, lam):
    """CDF by adaptive quadrature of the density after ``t = u**2``.

    The substitution removes the ``t**(df/2 - 1)`` singularity at the origin.
    """
    if x <= 0:
        return 0.0
    root = np.sqrt(x)
    mode = max(df - 2 + lam, 0.0)
    pts = [v for v in (np.sqrt(mode),) if 0 < v < root]
    val, _ = integrate.quad(lambda u: 2 * u * ncx2_density(u * u, df, lam), 0.0, root,
                            epsabs=1e-14, epsrel=1e-13, limit=500, points=pts or None)
    return val


def special_grid():
    """Fixed 50-point ``(x, df, lam)`` grid covering the chain's working range."""
    rng = np.random.default_rng(8)
    dfs = [1, 2, 3, 5, 8]
    grid = []
    for df in dfs:
        for _ in range(10):
            lam = float(rng.choice([0.0, rng.uniform(0.01, 2), rng.uniform(2, 60)]))
            mean = df + lam
            x = float(rng.uniform(0.02, 2.5) * mean)
            grid.append((x, df, lam))
    return grid


def normal_cdf_mp(z):
    with mp.workdps(40):
        return float(mp.ncdf(z))
