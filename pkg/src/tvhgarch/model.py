"""Model parameterizations and the conditional-variance filter.

Three variants share one filter::

    h_t = phi0 + w_t * sum_{i=1..K} phi_i * y_{t-i}^2

* FIGARCH: ``w_t = 1``
* HGARCH: ``w_t = w`` with ``0 < w < 1``
* TV-HGARCH: ``w_t = logistic(eta * y_{t-1}^2)``
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import expit

from tvhgarch.errors import DomainError, NumericalError, UnsupportedOrderError
from tvhgarch.fracdiff import arch_inf_coeffs, frac_weights

__all__ = [
    "Fixed",
    "Logistic",
    "ModelParams",
    "VariancePath",
    "amplitude",
    "amplitude_derivative",
    "check_general_moment_condition",
    "check_second_moment_condition",
    "default_truncation",
    "filter_variance",
]

MAX_TRUNCATION = 1000
POSITIVITY_FLOOR = 1e-12


@dataclass(frozen=True)
class Fixed:
    """Constant amplitude. ``w=1`` is FIGARCH, ``w<1`` is HGARCH."""

    w: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "w", float(self.w))
        if not 0.0 < self.w <= 1.0:
            raise DomainError(f"fixed amplitude must lie in (0, 1], got {self.w}")


@dataclass(frozen=True)
class Logistic:
    """Amplitude ``w_t = 1 / (1 + exp(-eta * y_{t-1}^2))``."""

    eta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "eta", float(self.eta))
        if not self.eta >= 0.0:
            raise DomainError(f"smoothness eta must be nonnegative, got {self.eta}")


AmplitudeSpec = Union[Fixed, Logistic]


def _as_tuple(x) -> tuple:
    if np.isscalar(x):
        return (float(x),)
    return tuple(float(v) for v in x)


@dataclass(frozen=True)
class ModelParams:
    gamma: float
    beta: tuple
    delta: tuple
    d: float
    amplitude: AmplitudeSpec = field(default_factory=Fixed)

    def __post_init__(self):
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "beta", _as_tuple(self.beta))
        object.__setattr__(self, "delta", _as_tuple(self.delta))
        if not self.gamma > 0.0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 < self.d < 1.0:
            raise DomainError(f"d must lie in (0, 1), got {self.d}")
        if not self.persistence > 0.0:
            raise DomainError(f"1 - sum(beta) must be positive, got {self.persistence}")

    @property
    def p(self) -> int:
        return len(self.beta)

    @property
    def q(self) -> int:
        return len(self.delta)

    @property
    def persistence(self) -> float:
        """``beta(1) = 1 - sum(beta_i)``."""
        return 1.0 - sum(self.beta)

    @property
    def phi0(self) -> float:
        return self.gamma / self.persistence

    @property
    def variant(self) -> str:
        if isinstance(self.amplitude, Logistic):
            return "TV-HGARCH"
        return "FIGARCH" if self.amplitude.w == 1.0 else "HGARCH"

    def with_amplitude(self, amplitude: AmplitudeSpec) -> "ModelParams":
        return replace(self, amplitude=amplitude)

    def as_dict(self) -> dict:
        out = {"gamma": self.gamma}
        out.update({f"beta[{i + 1}]": b for i, b in enumerate(self.beta)})
        out.update({f"delta[{j + 1}]": x for j, x in enumerate(self.delta)})
        out["d"] = self.d
        if isinstance(self.amplitude, Logistic):
            out["eta"] = self.amplitude.eta
        elif self.amplitude.w != 1.0:
            out["w"] = self.amplitude.w
        return out


@dataclass(frozen=True)
class VariancePath:
    h: np.ndarray
    w: np.ndarray
    # sum_i phi_i y_{t-i}^2, kept for derivative computations
    arch_term: np.ndarray
    # transition variable y_{t-1}^2 (presample proxy at t = 1)
    transition: np.ndarray


def default_truncation(n_obs: int) -> int:
    return max(1, min(n_obs - 1, MAX_TRUNCATION))


def amplitude(eta, y_prev_sq):
    """Logistic amplitude ``exp(eta*x) / (1 + exp(eta*x))``, overflow-safe."""
    return expit(np.multiply(eta, y_prev_sq))


def amplitude_derivative(eta, y_prev_sq):
    """``d w / d eta = x exp(eta x) / (1 + exp(eta x))^2``."""
    w = amplitude(eta, y_prev_sq)
    return np.multiply(y_prev_sq, w * (1.0 - w))


def presample_value(y2: np.ndarray, presample: Union[str, float]) -> float:
    if presample == "mean":
        return float(np.mean(y2))
    if presample == "zero":
        return 0.0
    return float(presample)


def lagged_sums(y2: np.ndarray, coefs: np.ndarray, fill: float) -> np.ndarray:
    """``sum_{i=1..K} coefs[..., i-1] * y2_{t-i}`` for every ``t``, lags before the
    sample replaced by ``fill``. ``coefs`` may be 1-d or a stack of rows."""
    coefs = np.atleast_2d(coefs)
    K = coefs.shape[1]
    T = len(y2)
    ext = np.concatenate((np.full(K, fill), y2))
    kernel = np.concatenate((np.zeros((coefs.shape[0], 1)), coefs), axis=1)
    full = fftconvolve(ext[None, :], kernel, axes=1)
    return full[:, K : K + T]


def filter_variance(
    y,
    params: ModelParams,
    K: int | None = None,
    presample: Union[str, float] = "mean",
) -> VariancePath:
    """Conditional variance path of ``y`` under ``params``.

    ``presample`` replaces the unobserved ``y_s^2`` for ``s <= 0``: ``"mean"``
    (in-sample mean of ``y^2``), ``"zero"``, or an explicit number.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) < 1:
        raise DomainError("y must be a non-empty 1-d series")
    if K is None:
        K = default_truncation(len(y))
    coefs = arch_inf_coeffs(params, K)
    y2 = y * y
    fill = presample_value(y2, presample)
    arch_term = lagged_sums(y2, coefs.phi, fill)[0]
    transition = np.concatenate(([fill], y2[:-1]))
    amp = params.amplitude
    if isinstance(amp, Logistic):
        w = amplitude(amp.eta, transition)
    else:
        w = np.full(len(y), amp.w)
    h = coefs.phi0 + w * arch_term
    floor = POSITIVITY_FLOOR * coefs.phi0
    if not np.all(h >= floor) or not np.all(np.isfinite(h)):
        raise NumericalError("conditional variance fell below the positivity floor")
    return VariancePath(h=h, w=w, arch_term=arch_term, transition=transition)


def check_second_moment_condition(params: ModelParams, K: int) -> tuple[bool, float]:
    """Sufficient second-moment condition for the (1, d, 1) model.

    Returns ``(holds, bound)``; ``bound`` is the implied upper bound on
    ``E y_t^2`` when the condition holds and ``inf`` otherwise.
    """
    if params.p != 1 or params.q != 1:
        raise UnsupportedOrderError("second-moment condition is stated for p = q = 1 only")
    g = frac_weights(params.d, K).weights
    delta = params.delta[0]
    total = delta + g[0] + float(np.sum(g[1:] - delta * g[:-1]))
    if total < 1.0:
        return True, params.gamma / (1.0 - total)
    return False, float("inf")


def _double_factorial_odd(m: int) -> float:
    return float(np.prod(np.arange(1, 2 * m, 2, dtype=float)))


def check_general_moment_condition(
    params: ModelParams, m: int, K: int
) -> tuple[bool, float, float]:
    """``S^m mu_m < 1`` with ``S = sum phi_i`` and Gaussian ``mu_m = E eps^(2m)``."""
    if m < 1:
        raise DomainError(f"moment order must be >= 1, got {m}")
    S = arch_inf_coeffs(params, K).tail_mass
    mu = _double_factorial_odd(m)
    return bool(S**m * mu < 1.0), S, mu
