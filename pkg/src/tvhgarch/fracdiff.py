"""Fractional differencing weights and truncated ARCH(inf) coefficients.

The conditional variance is written as ``h_t = phi0 + w_t * sum_i phi_i y_{t-i}^2``
where ``phi(B) = 1 - delta(B) / beta(B) * (1 - B)^d``. All series are handled as
truncated power series in the backshift operator: index ``i`` of an array holds
the coefficient of ``B**i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from tvhgarch.errors import DomainError

__all__ = [
    "ArchInfDerivatives",
    "ArchInfWeights",
    "FracWeights",
    "arch_inf_coeffs",
    "arch_inf_derivatives",
    "frac_weights",
    "tail_bound",
]


@dataclass(frozen=True)
class FracWeights:
    """Coefficients ``g_1..g_K`` of ``(1 - B)^d = 1 - sum_i g_i B^i``."""

    d: float
    weights: np.ndarray

    @property
    def K(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class ArchInfWeights:
    phi0: float
    phi: np.ndarray  # phi[i - 1] is the coefficient on y_{t-i}^2

    @property
    def K(self) -> int:
        return len(self.phi)

    @property
    def tail_mass(self) -> float:
        return float(self.phi.sum())

    @property
    def admissible(self) -> bool:
        return bool(self.phi.min() >= 0.0)


@dataclass(frozen=True)
class ArchInfDerivatives:
    """Derivatives of ``phi0`` and ``phi_1..phi_K`` in the order
    ``(gamma, beta_1..beta_p, delta_1..delta_q, d)``."""

    dphi0: np.ndarray  # shape (n_params,)
    dphi: np.ndarray  # shape (n_params, K)


def _check_d(d: float) -> None:
    if not 0.0 < d < 1.0:
        raise DomainError(f"fractional order d must lie in (0, 1), got {d}")


def _check_K(K: int) -> None:
    if int(K) != K or K < 1:
        raise DomainError(f"truncation K must be a positive integer, got {K}")


def _frac_poly(d: float, K: int) -> np.ndarray:
    """Series of ``(1 - B)^d`` up to ``B**K``: ``[1, -g_1, ..., -g_K]``.

    Uses the ratio recursion ``c_i = c_{i-1} (i - 1 - d) / i``; the gamma-function
    form overflows for moderate ``i``.
    """
    ratios = (np.arange(K, dtype=float) - d) / np.arange(1, K + 1, dtype=float)
    poly = np.empty(K + 1)
    poly[0] = 1.0
    poly[1:] = np.cumprod(ratios)
    return poly


def frac_weights(d: float, K: int) -> FracWeights:
    _check_d(d)
    _check_K(K)
    return FracWeights(d=float(d), weights=-_frac_poly(d, int(K))[1:])


def _lag_poly(coefs: Sequence[float]) -> np.ndarray:
    return np.concatenate(([1.0], -np.asarray(coefs, dtype=float)))


def _series_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """First ``len(num)`` coefficients of ``num(B) / den(B)`` (``den[0] == 1``)."""
    return lfilter([1.0], den, num)


def _shift(series: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros_like(series)
    out[k:] = series[: len(series) - k]
    return out


def _persistence(beta: Sequence[float]) -> float:
    b1 = 1.0 - float(np.sum(beta))
    if b1 <= 0.0:
        raise DomainError(f"beta(1) = 1 - sum(beta) must be positive, got {b1}")
    return b1


@lru_cache(maxsize=128)
def _coeffs_cached(gamma: float, beta: tuple, delta: tuple, d: float, K: int):
    b1 = _persistence(beta)
    num = np.convolve(_lag_poly(delta), _frac_poly(d, K))[: K + 1]
    ratio = _series_div(num, _lag_poly(beta))
    phi = -ratio[1:]
    phi.setflags(write=False)
    return gamma / b1, phi


def arch_inf_coeffs(params, K: int) -> ArchInfWeights:
    """Truncated ARCH(inf) coefficients for ``params`` (any object exposing
    ``gamma``, ``beta``, ``delta`` and ``d``).

    Negative ``phi_i`` are returned as computed; see ``ArchInfWeights.admissible``.
    """
    _check_d(params.d)
    _check_K(K)
    phi0, phi = _coeffs_cached(
        float(params.gamma),
        tuple(float(b) for b in params.beta),
        tuple(float(x) for x in params.delta),
        float(params.d),
        int(K),
    )
    return ArchInfWeights(phi0=phi0, phi=phi)


def arch_inf_derivatives(params, K: int) -> ArchInfDerivatives:
    """Analytic parameter derivatives of the truncated ARCH(inf) coefficients.

    With ``P(B) = delta(B) (1 - B)^d / beta(B)`` and ``phi_i = -P_i``:

    * ``dP/d beta_k = B^k P(B) / beta(B)``
    * ``dP/d delta_j = -B^j (1 - B)^d / beta(B)``
    * ``dP/d d = P(B) log(1 - B)`` with ``log(1 - B) = -sum_k B^k / k``
    """
    _check_d(params.d)
    _check_K(K)
    beta = np.asarray(params.beta, dtype=float)
    delta = np.asarray(params.delta, dtype=float)
    p, q = len(beta), len(delta)
    b1 = _persistence(beta)
    beta_poly = _lag_poly(beta)
    frac = _frac_poly(params.d, K)
    ratio = _series_div(np.convolve(_lag_poly(delta), frac)[: K + 1], beta_poly)

    n = 2 + p + q
    dphi0 = np.zeros(n)
    dphi = np.zeros((n, K))
    dphi0[0] = 1.0 / b1
    dphi0[1 : 1 + p] = params.gamma / b1**2

    ratio_over_beta = _series_div(ratio, beta_poly)
    for k in range(1, p + 1):
        dphi[k] = -_shift(ratio_over_beta, k)[1:]
    frac_over_beta = _series_div(frac, beta_poly)
    for j in range(1, q + 1):
        dphi[p + j] = _shift(frac_over_beta, j)[1:]
    log1m = np.zeros(K + 1)
    log1m[1:] = -1.0 / np.arange(1, K + 1)
    dphi[-1] = -np.convolve(ratio, log1m)[1 : K + 1]
    return ArchInfDerivatives(dphi0=dphi0, dphi=dphi)


def tail_bound(weights: ArchInfWeights, d: float) -> float:
    """Estimate of the neglected mass ``sum_{i > K} phi_i``.

    Far out the coefficients decay like ``c * i^(-1-d)``; matching ``c`` to the
    last retained coefficient and bounding the tail sum by the integral from
    ``K`` gives ``phi_K * K / d``.
    """
    _check_d(d)
    K = weights.K
    if K < 2:
        raise DomainError("tail_bound needs at least two coefficients")
    return max(float(weights.phi[-1]), 0.0) * K / d
