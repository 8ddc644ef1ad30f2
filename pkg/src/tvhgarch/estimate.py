"""Gaussian quasi-maximum-likelihood estimation.

Free parameters are mapped to an unconstrained vector before optimization:
``log`` for gamma, ``logit`` for beta, delta, d and a fixed amplitude ``w``,
and the inverse softplus for eta. The optimizer is BFGS with a backtracking
(Armijo) line search; steps landing on inadmissible parameters evaluate to
``+inf`` and are simply shortened.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy.special import expit, logit

from tvhgarch.errors import DomainError, NumericalError
from tvhgarch.fracdiff import arch_inf_coeffs, arch_inf_derivatives
from tvhgarch.model import (
    Fixed,
    Logistic,
    ModelParams,
    amplitude_derivative,
    default_truncation,
    filter_variance,
    lagged_sums,
    presample_value,
)

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
VARIANTS = ("FIGARCH", "HGARCH", "TV-HGARCH")
# Boxes for the short-memory polynomials; nonnegativity of the ARCH(inf)
# coefficients is enforced separately.
BETA_BOX = (0.0, 1.0)
DELTA_BOX = (0.0, 1.0)

__all__ = [
    "FitConfig",
    "FitResult",
    "Parameterization",
    "SingularInformationError",
    "fit",
    "loglik_terms",
    "neg_avg_loglik",
    "objective_gradient",
    "observation_scores",
    "se_from_scores",
    "standard_errors",
    "variance_gradient",
]


class SingularInformationError(NumericalError):
    pass


@dataclass(frozen=True)
class FitConfig:
    K: int | None = None
    max_iterations: int = 500
    gradient_mode: Literal["analytic", "central"] = "analytic"
    gtol: float = 1e-5
    xtol: float = 1e-10
    multistart: int = 1
    presample: str | float = "mean"
    seed: int = 0
    enforce_admissibility: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if not (self.gtol > 0 and self.xtol > 0):
            raise DomainError("tolerances must be positive")
        if self.multistart < 1:
            raise DomainError("multistart must be >= 1")
        if self.gradient_mode not in ("analytic", "central"):
            raise DomainError(f"unknown gradient mode {self.gradient_mode!r}")


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    loglik: float
    converged: bool
    iterations: int
    score_norm: float
    variant: str
    n_obs: int
    K: int
    presample: str | float = "mean"
    message: str = ""
    free: tuple = field(default=())

    def loglik_terms(self, y) -> np.ndarray:
        """Per-observation ``l_t = ln 2pi + ln h_t + y_t^2 / h_t``."""
        return loglik_terms(y, self.params, self.K, self.presample)


def loglik_terms(y, params: ModelParams, K: int | None = None, presample="mean") -> np.ndarray:
    y = np.asarray(y, dtype=float)
    h = filter_variance(y, params, K, presample).h
    return LOG_2PI + np.log(h) + y * y / h


def neg_avg_loglik(y, params: ModelParams, K: int | None = None, presample="mean") -> float:
    """``(1/T) sum_t 0.5 l_t``; ``inf`` when the variance filter fails."""
    try:
        return 0.5 * float(np.mean(loglik_terms(y, params, K, presample)))
    except (DomainError, NumericalError):
        return math.inf


def _auto_amplitude(params: ModelParams, include_amplitude: bool | None) -> bool:
    if include_amplitude is None:
        return isinstance(params.amplitude, Logistic) or params.amplitude.w != 1.0
    return include_amplitude


def _free_names(params: ModelParams, include_amplitude: bool) -> list[str]:
    names = ["gamma"]
    names += [f"beta[{i + 1}]" for i in range(params.p)]
    names += [f"delta[{j + 1}]" for j in range(params.q)]
    names.append("d")
    if include_amplitude:
        names.append("eta" if isinstance(params.amplitude, Logistic) else "w")
    return names


def _natural_vector(params: ModelParams, include_amplitude: bool) -> np.ndarray:
    vals = [params.gamma, *params.beta, *params.delta, params.d]
    if include_amplitude:
        amp = params.amplitude
        vals.append(amp.eta if isinstance(amp, Logistic) else amp.w)
    return np.array(vals, dtype=float)


def _rebuild(params: ModelParams, theta: np.ndarray, names: list[str]) -> ModelParams:
    p, q = params.p, params.q
    amp = params.amplitude
    if len(names) > 2 + p + q:
        amp = Logistic(theta[-1]) if names[-1] == "eta" else Fixed(theta[-1])
    return ModelParams(
        gamma=theta[0],
        beta=tuple(theta[1 : 1 + p]),
        delta=tuple(theta[1 + p : 1 + p + q]),
        d=theta[1 + p + q],
        amplitude=amp,
    )


def _analytic_variance_gradient(y, params, K, presample, include_amplitude):
    path = filter_variance(y, params, K, presample)
    y2 = y * y
    fill = presample_value(y2, presample)
    der = arch_inf_derivatives(params, K)
    cols = der.dphi0[:, None] + path.w[None, :] * lagged_sums(y2, der.dphi, fill)
    cols = list(cols)
    if include_amplitude:
        amp = params.amplitude
        if isinstance(amp, Logistic):
            cols.append(amplitude_derivative(amp.eta, path.transition) * path.arch_term)
        else:
            cols.append(path.arch_term.copy())
    return path.h, np.column_stack(cols)


def _central_variance_gradient(y, params, K, presample, include_amplitude, step=1e-5):
    names = _free_names(params, include_amplitude)
    theta = _natural_vector(params, include_amplitude)
    h = filter_variance(y, params, K, presample).h
    cols = []
    for j in range(len(theta)):
        e = np.zeros_like(theta)
        e[j] = step
        up = filter_variance(y, _rebuild(params, theta + e, names), K, presample).h
        dn = filter_variance(y, _rebuild(params, theta - e, names), K, presample).h
        cols.append((up - dn) / (2 * step))
    return h, np.column_stack(cols)


def variance_gradient(
    y,
    params: ModelParams,
    K: int | None = None,
    presample="mean",
    mode: str = "analytic",
    include_amplitude: bool | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(h, dh)`` where ``dh[t, j] = d h_t / d theta_j``.

    Columns follow ``(gamma, beta.., delta.., d)``, then ``eta`` (logistic
    amplitude) or ``w`` (fixed amplitude) when ``include_amplitude`` is set.
    By default the amplitude column is present unless the model is FIGARCH.
    """
    y = np.asarray(y, dtype=float)
    include_amplitude = _auto_amplitude(params, include_amplitude)
    if K is None:
        K = default_truncation(len(y))
    if mode == "analytic":
        return _analytic_variance_gradient(y, params, K, presample, include_amplitude)
    if mode == "central":
        return _central_variance_gradient(y, params, K, presample, include_amplitude)
    raise DomainError(f"unknown gradient mode {mode!r}")


def observation_scores(y, params, K=None, presample="mean", mode="analytic",
                       include_amplitude=None) -> np.ndarray:
    """Per-observation ``d l_t / d theta = (1 - y^2/h) (1/h) dh/dtheta``."""
    y = np.asarray(y, dtype=float)
    h, dh = variance_gradient(y, params, K, presample, mode, include_amplitude)
    return ((1.0 - y * y / h) / h)[:, None] * dh


def objective_gradient(y, params, K=None, presample="mean", mode="analytic",
                       include_amplitude=None) -> np.ndarray:
    """Gradient of ``neg_avg_loglik`` in natural parameters."""
    return 0.5 * observation_scores(y, params, K, presample, mode, include_amplitude).mean(axis=0)


class Parameterization:
    """Maps a variant's free parameters to and from an unconstrained vector."""

    def __init__(self, variant: str, p: int = 1, q: int = 1, fixed_w: float | None = None):
        if variant not in VARIANTS:
            raise DomainError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        if p < 1 or q < 1:
            raise DomainError("orders p and q must be positive integers")
        if fixed_w is not None and variant != "HGARCH":
            raise DomainError("fixed_w only applies to the HGARCH variant")
        self.variant, self.p, self.q, self.fixed_w = variant, p, q, fixed_w
        self.free_amplitude = variant == "TV-HGARCH" or (variant == "HGARCH" and fixed_w is None)

    @property
    def names(self) -> list[str]:
        names = ["gamma"]
        names += [f"beta[{i + 1}]" for i in range(self.p)]
        names += [f"delta[{j + 1}]" for j in range(self.q)]
        names.append("d")
        if self.free_amplitude:
            names.append("eta" if self.variant == "TV-HGARCH" else "w")
        return names

    @property
    def size(self) -> int:
        return len(self.names)

    def amplitude(self, value: float | None = None):
        if self.variant == "FIGARCH":
            return Fixed(1.0)
        if self.variant == "TV-HGARCH":
            return Logistic(value)
        return Fixed(self.fixed_w if self.fixed_w is not None else value)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Open boxes for the logit-mapped coordinates (gamma and eta are unbounded above)."""
        lo = [0.0] + [BETA_BOX[0]] * self.p + [DELTA_BOX[0]] * self.q + [0.0]
        hi = [np.inf] + [BETA_BOX[1]] * self.p + [DELTA_BOX[1]] * self.q + [1.0]
        if self.free_amplitude:
            lo.append(0.0)
            hi.append(np.inf if self.variant == "TV-HGARCH" else 1.0)
        return np.array(lo), np.array(hi)

    def to_natural(self, u: np.ndarray) -> np.ndarray:
        lo, hi = self.bounds()
        theta = lo + np.where(np.isfinite(hi), hi - lo, 1.0) * expit(u)
        theta[0] = math.exp(u[0])
        if self.variant == "TV-HGARCH":
            theta[-1] = np.logaddexp(0.0, u[-1])
        return theta

    def dnatural(self, u: np.ndarray) -> np.ndarray:
        """Elementwise derivative of ``to_natural``."""
        lo, hi = self.bounds()
        s = expit(u)
        jac = np.where(np.isfinite(hi), hi - lo, 1.0) * s * (1.0 - s)
        jac[0] = math.exp(u[0])
        if self.variant == "TV-HGARCH":
            jac[-1] = s[-1]
        return jac

    def from_natural(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        lo, hi = self.bounds()
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.clip((theta - lo) / (hi - lo), 1e-12, 1 - 1e-12)
        u = logit(frac)
        u[0] = math.log(theta[0])
        if self.variant == "TV-HGARCH":
            eta = max(theta[-1], 1e-12)
            u[-1] = eta + math.log(-math.expm1(-eta))
        return u

    def params(self, theta: np.ndarray) -> ModelParams:
        p, q = self.p, self.q
        return ModelParams(
            gamma=theta[0],
            beta=tuple(theta[1 : 1 + p]),
            delta=tuple(theta[1 + p : 1 + p + q]),
            d=theta[1 + p + q],
            amplitude=self.amplitude(theta[-1] if self.free_amplitude else None),
        )

    def vector(self, params: ModelParams) -> np.ndarray:
        return _natural_vector(params, self.free_amplitude)


class _Objective:
    def __init__(self, y, spec: Parameterization, K, config: FitConfig):
        self.y, self.spec, self.K, self.config = y, spec, K, config

    def params(self, u):
        theta = self.spec.to_natural(u)
        if not np.all(np.isfinite(theta)):
            raise DomainError("non-finite parameter")
        params = self.spec.params(theta)
        if self.config.enforce_admissibility and not arch_inf_coeffs(params, self.K).admissible:
            raise DomainError("negative ARCH(inf) coefficient")
        return params

    def value(self, u) -> float:
        try:
            params = self.params(u)
        except DomainError:
            return math.inf
        return neg_avg_loglik(self.y, params, self.K, self.config.presample)

    def gradient(self, u) -> np.ndarray:
        params = self.params(u)
        g = objective_gradient(self.y, params, self.K, self.config.presample,
                               self.config.gradient_mode, self.spec.free_amplitude)
        return g * self.spec.dnatural(u)


@dataclass
class _BfgsOutcome:
    x: np.ndarray
    f: float
    gnorm: float
    iterations: int
    message: str


def _bfgs(fun, grad, x0, gtol, xtol, maxiter, max_step=2.0) -> _BfgsOutcome:
    x = np.array(x0, dtype=float)
    f = fun(x)
    if not math.isfinite(f):
        return _BfgsOutcome(x, f, math.inf, 0, "infeasible starting point")
    g = grad(x)
    n = len(x)
    H = np.eye(n)
    first = True
    it = 0
    message = "maximum iterations reached"
    for it in range(1, maxiter + 1):
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= gtol:
            message = "gradient tolerance reached"
            it -= 1
            break
        direction = -H @ g
        slope = float(g @ direction)
        if slope >= 0:
            H = np.eye(n)
            direction, slope = -g, -float(g @ g)
        biggest = float(np.max(np.abs(direction)))
        step = min(1.0, max_step / biggest) if biggest > 0 else 1.0
        while True:
            x_new = x + step * direction
            f_new = fun(x_new)
            if math.isfinite(f_new) and f_new <= f + 1e-4 * step * slope:
                break
            step *= 0.5
            if step * biggest < 1e-14:
                break
        if not (math.isfinite(f_new) and f_new <= f + 1e-4 * step * slope):
            if not first:
                # curvature estimate may be stale; retry once along steepest descent
                H, first = np.eye(n), True
                continue
            message = "line search failed"
            break
        g_new = grad(x_new)
        s, yv = x_new - x, g_new - g
        x, f, g = x_new, f_new, g_new
        sy = float(s @ yv)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(yv)):
            if first:
                H = np.eye(n) * sy / float(yv @ yv)
                first = False
            rho = 1.0 / sy
            I = np.eye(n)
            H = (I - rho * np.outer(s, yv)) @ H @ (I - rho * np.outer(yv, s)) + rho * np.outer(s, s)
        if float(np.max(np.abs(s))) <= xtol * (1.0 + float(np.max(np.abs(x)))):
            message = "step tolerance reached"
            break
    return _BfgsOutcome(x, f, float(np.max(np.abs(g))), it, message)


def _initial_natural(y, spec: Parameterization) -> np.ndarray:
    scale = float(np.mean(y * y))
    beta0, delta0, d0 = 0.4, 0.2, 0.5
    theta = [scale * (1 - beta0)]
    # mass on the first lag keeps higher-order starts admissible
    theta += [beta0] + [0.01] * (spec.p - 1)
    theta += [delta0] + [0.01] * (spec.q - 1)
    theta.append(d0)
    if spec.free_amplitude:
        theta.append(1.0 if spec.variant == "TV-HGARCH" else 0.9)
    return np.array(theta)


def fit(
    y,
    variant: str = "TV-HGARCH",
    p: int = 1,
    q: int = 1,
    config: FitConfig | None = None,
    fixed_w: float | None = None,
) -> FitResult:
    """Maximize the Gaussian log-likelihood of ``y`` under ``variant``.

    ``fixed_w`` holds the HGARCH amplitude at a given value instead of
    estimating it. Non-convergence is reported on the result, not raised.
    """
    config = config or FitConfig()
    spec = Parameterization(variant, p, q, fixed_w)
    y = np.asarray(y, dtype=float)
    T = len(y)
    if y.ndim != 1 or T < p + q + 2:
        raise DomainError(f"need a 1-d series with at least {p + q + 2} observations")
    if not np.all(np.isfinite(y)):
        raise DomainError("series contains non-finite values")
    if not np.any(y):
        raise DomainError("series is identically zero")
    K = config.K or default_truncation(T)
    objective = _Objective(y, spec, K, config)
    u0 = spec.from_natural(_initial_natural(y, spec))

    if np.var(y) == 0.0:
        logger.warning("zero-variance series; skipping optimization")
        params = spec.params(spec.to_natural(u0))
        return FitResult(params, -T * objective.value(u0), False, 0, math.inf, variant, T, K,
                         config.presample, "degenerate input: zero sample variance",
                         tuple(spec.names))

    rng = np.random.default_rng(config.seed)
    starts = [u0]
    while len(starts) < config.multistart:
        for _ in range(20):
            cand = u0 + rng.normal(0.0, 0.5, size=len(u0))
            if math.isfinite(objective.value(cand)):
                break
        starts.append(cand)

    best = None
    for start in starts:
        out = _bfgs(objective.value, objective.gradient, start, config.gtol, config.xtol,
                    config.max_iterations)
        if math.isfinite(out.f) and (best is None or out.f < best.f):
            best = out
    if best is None:
        raise NumericalError("no feasible starting point for the optimizer")
    theta = spec.to_natural(best.x)
    params = spec.params(theta)
    converged = best.gnorm <= config.gtol
    result = FitResult(
        params=params,
        loglik=-T * best.f,
        converged=converged,
        iterations=best.iterations,
        score_norm=best.gnorm,
        variant=variant,
        n_obs=T,
        K=K,
        presample=config.presample,
        message=best.message,
        free=tuple(spec.names),
    )
    if variant == "HGARCH" and fixed_w is None:
        result = _with_unit_amplitude_limit(result, y, p, q, config)
    return result


def _with_unit_amplitude_limit(result: FitResult, y, p, q, config) -> FitResult:
    """Compare a free-amplitude fit with its ``w = 1`` edge.

    The logit map flattens the objective near ``w = 1``, so the optimizer can
    stop just short of an edge optimum. The edge is the FIGARCH model, fitted
    directly; if it is at least as good it is reported with a boundary message.
    """
    try:
        edge = fit(y, "FIGARCH", p, q, config)
    except NumericalError:
        return result
    if edge.loglik < result.loglik:
        return result
    return replace(edge, variant="HGARCH", free=result.free,
                   iterations=result.iterations + edge.iterations,
                   message=f"boundary: amplitude at w = 1; {edge.message}")


def se_from_scores(scores: np.ndarray) -> np.ndarray:
    """Standard errors from the outer product of per-observation scores."""
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    info = scores.T @ scores
    if np.linalg.matrix_rank(info) < info.shape[0] or np.linalg.cond(info) > 1e14:
        raise SingularInformationError("outer-product information matrix is singular")
    return np.sqrt(np.diag(np.linalg.inv(info)))


def standard_errors(result: FitResult, y, mode: str = "analytic") -> dict[str, float]:
    """Outer-product-of-gradients standard errors for the free parameters."""
    include = len(result.free) > 2 + result.params.p + result.params.q if result.free else None
    scores = -0.5 * observation_scores(y, result.params, result.K, result.presample, mode,
                                       include_amplitude=include)
    names = result.free or _free_names(result.params, _auto_amplitude(result.params, include))
    return dict(zip(names, se_from_scores(scores)))
