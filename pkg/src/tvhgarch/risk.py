"""One-day-ahead VaR forecasts and their likelihood-ratio backtests.

An exception on day ``t`` is ``y_t < VaR_t`` (strict). The independence and
conditional coverage statistics are formed with the unconditional likelihood
over all ``T`` days in the numerator, so ``LR_CC = LR_UC + LR_IND`` holds
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import xlogy

from tvhgarch.errors import DomainError
from tvhgarch.estimate import LOG_2PI, FitResult
from tvhgarch.model import filter_variance
from tvhgarch.statfn import chi2_isf, chi2_sf, norm_quantile

__all__ = [
    "BacktestReport",
    "DescriptiveStats",
    "VarForecastSeries",
    "backtest",
    "descriptive_stats",
    "exceptions",
    "fit_metrics",
    "forecast_var",
    "lr_cc",
    "lr_ind",
    "lr_uc",
    "transition_counts",
]

SIGNIFICANCE = 0.05


@dataclass(frozen=True)
class VarForecastSeries:
    sigma: np.ndarray
    var_at: dict
    quantile_source: str = "gaussian"
    quantiles: dict = field(default_factory=dict)

    @property
    def h(self) -> np.ndarray:
        return self.sigma**2


def _check_level(rho: float) -> None:
    if not 0.0 < rho < 0.5:
        raise DomainError(f"VaR level must lie in (0, 0.5), got {rho}")


def forecast_var(y_insample, y_outsample, fit: FitResult, levels=(0.05, 0.10),
                 quantile_source: str = "gaussian") -> VarForecastSeries:
    """Roll the fitted filter through the out-of-sample period.

    Parameters stay at their in-sample estimates; each ``sigma_t`` uses returns
    up to ``t - 1`` only. The presample proxy is the in-sample mean of ``y^2``.
    """
    for rho in levels:
        _check_level(rho)
    y_in = np.asarray(y_insample, dtype=float)
    y_out = np.asarray(y_outsample, dtype=float)
    if len(y_out) == 0:
        raise DomainError("out-of-sample segment is empty")
    proxy = float(np.mean(y_in**2)) if fit.presample == "mean" else fit.presample
    path = filter_variance(np.concatenate((y_in, y_out)), fit.params, fit.K, proxy)
    sigma_all = np.sqrt(path.h)
    sigma = sigma_all[len(y_in):]
    if quantile_source == "gaussian":
        quantiles = {rho: norm_quantile(rho) for rho in levels}
    elif quantile_source == "empirical":
        z = y_in / sigma_all[: len(y_in)]
        quantiles = {rho: float(np.quantile(z, rho)) for rho in levels}
    else:
        raise DomainError(f"unknown quantile source {quantile_source!r}")
    var_at = {rho: quantiles[rho] * sigma for rho in levels}
    return VarForecastSeries(sigma, var_at, quantile_source, quantiles)


def exceptions(y, var) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    var = np.asarray(var, dtype=float)
    if y.shape != var.shape:
        raise DomainError(f"length mismatch: {y.shape} returns vs {var.shape} VaR values")
    return (y < var).astype(int)


def _clamp(stat: float) -> float:
    if stat < 0.0:
        if stat < -1e-12:
            raise ArithmeticError(f"likelihood-ratio statistic is negative: {stat}")
        return 0.0
    return stat


def _bernoulli_loglik(k, m, prob) -> float:
    """``k log(prob) + m log(1 - prob)`` with ``0 log 0 = 0``."""
    return float(xlogy(k, prob) + xlogy(m, 1.0 - prob))


def transition_counts(hits) -> tuple[int, int, int, int]:
    """``(n00, n01, n10, n11)`` over consecutive pairs, starting at day 2."""
    hits = np.asarray(hits, dtype=int)
    prev, cur = hits[:-1], hits[1:]
    n00 = int(np.sum((prev == 0) & (cur == 0)))
    n01 = int(np.sum((prev == 0) & (cur == 1)))
    n10 = int(np.sum((prev == 1) & (cur == 0)))
    n11 = int(np.sum((prev == 1) & (cur == 1)))
    return n00, n01, n10, n11


def _markov_loglik(n00, n01, n10, n11) -> float:
    xi01 = n01 / (n00 + n01) if n00 + n01 else 0.0
    xi11 = n11 / (n10 + n11) if n10 + n11 else 0.0
    return _bernoulli_loglik(n01, n00, xi01) + _bernoulli_loglik(n11, n10, xi11)


def lr_uc(T: int, n: int, rho: float) -> tuple[float, float]:
    """Kupiec unconditional coverage statistic and its chi2(1) p-value."""
    if T < 1 or not 0 <= n <= T:
        raise DomainError(f"need 0 <= n <= T and T >= 1, got n={n}, T={T}")
    xi = n / T
    stat = _clamp(-2.0 * (_bernoulli_loglik(n, T - n, rho) - _bernoulli_loglik(n, T - n, xi)))
    return stat, chi2_sf(stat, 1)


def lr_ind(hits) -> tuple[float, float, tuple[int, int, int, int]]:
    """Independence statistic, its chi2(1) p-value and the transition counts."""
    hits = np.asarray(hits, dtype=int)
    if len(hits) < 2:
        raise DomainError("independence test needs at least two observations")
    T, n = len(hits), int(hits.sum())
    counts = transition_counts(hits)
    xi = n / T
    stat = _clamp(-2.0 * (_bernoulli_loglik(n, T - n, xi) - _markov_loglik(*counts)))
    return stat, chi2_sf(stat, 1), counts


def lr_cc(T: int, n: int, rho: float, hits) -> tuple[float, float]:
    """Conditional coverage statistic and its chi2(2) p-value."""
    hits = np.asarray(hits, dtype=int)
    if len(hits) != T or int(hits.sum()) != n:
        raise DomainError("T and n must describe the supplied exception sequence")
    if T < 2:
        raise DomainError("conditional coverage test needs at least two observations")
    counts = transition_counts(hits)
    stat = _clamp(-2.0 * (_bernoulli_loglik(n, T - n, rho) - _markov_loglik(*counts)))
    return stat, chi2_sf(stat, 2)


@dataclass(frozen=True)
class BacktestReport:
    rho: float
    T: int
    n: int
    expected: float
    n00: int
    n01: int
    n10: int
    n11: int
    xi_hat: float
    xi01_hat: float
    xi11_hat: float
    lr_uc: float
    lr_ind: float
    lr_cc: float
    p_uc: float
    p_ind: float
    p_cc: float
    degenerate: bool

    @property
    def pass_uc(self) -> bool:
        return self.lr_uc < chi2_isf(SIGNIFICANCE, 1)

    @property
    def pass_ind(self) -> bool:
        return self.lr_ind < chi2_isf(SIGNIFICANCE, 1)

    @property
    def pass_cc(self) -> bool:
        return self.lr_cc < chi2_isf(SIGNIFICANCE, 2)


def backtest(hits, rho: float) -> BacktestReport:
    _check_level(rho)
    hits = np.asarray(hits, dtype=int)
    T, n = len(hits), int(hits.sum())
    uc, p_uc = lr_uc(T, n, rho)
    ind, p_ind, (n00, n01, n10, n11) = lr_ind(hits)
    cc, p_cc = lr_cc(T, n, rho, hits)
    degenerate = n in (0, T) or n00 + n01 == 0 or n10 + n11 == 0
    return BacktestReport(
        rho=rho, T=T, n=n, expected=rho * T,
        n00=n00, n01=n01, n10=n10, n11=n11,
        xi_hat=n / T,
        xi01_hat=n01 / (n00 + n01) if n00 + n01 else math.nan,
        xi11_hat=n11 / (n10 + n11) if n10 + n11 else math.nan,
        lr_uc=uc, lr_ind=ind, lr_cc=cc, p_uc=p_uc, p_ind=p_ind, p_cc=p_cc,
        degenerate=degenerate,
    )


def fit_metrics(y, h) -> tuple[float, float]:
    """``(RMSE, LLV)`` of variance forecasts ``h`` against squared returns."""
    y = np.asarray(y, dtype=float)
    h = np.asarray(h, dtype=float)
    if y.shape != h.shape:
        raise DomainError("y and h must have the same length")
    if np.any(h <= 0):
        raise DomainError("variance forecasts must be positive")
    y2 = y * y
    rmse = math.sqrt(float(np.mean((y2 - h) ** 2)))
    llv = -0.5 * float(np.sum(LOG_2PI + np.log(h) + y2 / h))
    return rmse, llv


@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    mean: float
    std_dev: float
    minimum: float
    maximum: float
    skewness: float
    excess_kurtosis: float

    @property
    def raw_kurtosis(self) -> float:
        return self.excess_kurtosis + 3.0


def descriptive_stats(y) -> DescriptiveStats:
    """Sample moments; std uses ``ddof=1``, skewness and kurtosis the moment
    (biased) estimators. Kurtosis is NaN below four observations."""
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise DomainError("descriptive statistics need at least 2 observations")
    return DescriptiveStats(
        n=len(y),
        mean=float(np.mean(y)),
        std_dev=float(np.std(y, ddof=1)),
        minimum=float(np.min(y)),
        maximum=float(np.max(y)),
        skewness=float(stats.skew(y)),
        excess_kurtosis=float(stats.kurtosis(y, fisher=True)) if len(y) >= 4 else math.nan,
    )
