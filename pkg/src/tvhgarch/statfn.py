"""Special functions used by the test statistics.

Everything here is backed by the standard library: ``math.erfc`` and
``math.lgamma`` (libm, accurate to a few ulp) and ``statistics.NormalDist``,
whose ``inv_cdf`` implements Wichura's AS241 (PPND16) rational approximation
with relative accuracy around 1e-16.
"""

from __future__ import annotations

import math
from statistics import NormalDist

_STD_NORMAL = NormalDist()


def chi2_sf(x: float, df: int) -> float:
    """Survival function of the chi-squared distribution for ``df`` in {1, 2}."""
    if df not in (1, 2):
        raise ValueError(f"chi2_sf supports df=1 or df=2, got {df}")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if df == 2:
        return math.exp(-0.5 * x)
    return math.erfc(math.sqrt(0.5 * x))


def chi2_isf(alpha: float, df: int) -> float:
    """Upper ``alpha`` critical value of chi-squared with ``df`` in {1, 2}."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if df == 2:
        return -2.0 * math.log(alpha)
    if df == 1:
        z = norm_quantile(1.0 - 0.5 * alpha)
        return z * z
    raise ValueError(f"chi2_isf supports df=1 or df=2, got {df}")


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def norm_quantile(p: float) -> float:
    """Inverse standard normal CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie strictly in (0, 1), got {p}")
    return _STD_NORMAL.inv_cdf(p)


def log_gamma(x: float) -> float:
    if x <= 0:
        raise ValueError("log_gamma is only defined here for x > 0")
    return math.lgamma(x)
