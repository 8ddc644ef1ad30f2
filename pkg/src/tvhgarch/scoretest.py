"""Score (Lagrange multiplier) test of constant amplitude against a logistic
time-varying amplitude, ``H0: eta = 0``.

Only the restricted model is estimated: an HGARCH fit with the amplitude held
at ``w = 1/2``, which is the logistic amplitude at ``eta = 0``. Around that
point ``d w_t / d eta = y_{t-1}^2 / 4``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tvhgarch.errors import DegenerateTestError
from tvhgarch.estimate import FitConfig, FitResult, fit, variance_gradient
from tvhgarch.statfn import chi2_isf, chi2_sf

__all__ = ["ScoreComponents", "ScoreTestResult", "components_from_arrays",
           "score_components", "score_test"]

NULL_AMPLITUDE = 0.5


@dataclass(frozen=True)
class ScoreComponents:
    S_tilde: float
    kappa_tilde: float
    J: np.ndarray
    R: np.ndarray
    Q: float
    degenerate: str = ""

    @property
    def schur(self) -> float:
        """``Q - R' J^{-1} R``."""
        return float(self.Q - self.R @ np.linalg.solve(self.J, self.R))


@dataclass(frozen=True)
class ScoreTestResult:
    lambda_s: float
    p_value: float
    components: ScoreComponents
    restricted_fit: FitResult | None = None

    @property
    def S_tilde(self) -> float:
        return self.components.S_tilde

    @property
    def kappa_tilde(self) -> float:
        return self.components.kappa_tilde

    def reject(self, alpha: float = 0.05) -> bool:
        return self.lambda_s > chi2_isf(alpha, 1)


def components_from_arrays(y2, h, dh_phi, dh_eta) -> ScoreComponents:
    """Assemble the test ingredients from a restricted variance path and its
    derivatives (``dh_phi`` has one column per restricted parameter)."""
    y2 = np.asarray(y2, dtype=float)
    h = np.asarray(h, dtype=float)
    T = len(h)
    a = np.asarray(dh_phi, dtype=float).reshape(T, -1) / h[:, None]
    b = np.asarray(dh_eta, dtype=float) / h
    u = y2 / h
    kappa = float(np.mean((u - 1.0) ** 2))
    J = a.T @ a / T
    R = a.T @ b / T
    Q = float(b @ b / T)
    S = float(np.sum((1.0 - u) * b) / np.sqrt(T))

    reason = ""
    if not kappa > 0.0:
        reason = "kappa is zero: standardized residuals have no dispersion"
    elif np.linalg.matrix_rank(J) < J.shape[0] or np.linalg.cond(J) > 1e14:
        reason = "J is singular"
    else:
        schur = float(Q - R @ np.linalg.solve(J, R))
        if not schur > 0.0:
            reason = "Q - R'J^-1 R is not positive"
    return ScoreComponents(S, kappa, J, R, Q, reason)


def score_components(y, restricted: FitResult, mode: str = "analytic") -> ScoreComponents:
    """Evaluate the score ingredients at the restricted estimate (``w_t = 1/2``)."""
    y = np.asarray(y, dtype=float)
    params = restricted.params
    h, dh_phi = variance_gradient(y, params, restricted.K, restricted.presample, mode,
                                  include_amplitude=False)
    y2 = y * y
    fill = float(np.mean(y2)) if restricted.presample == "mean" else (
        0.0 if restricted.presample == "zero" else float(restricted.presample))
    transition = np.concatenate(([fill], y2[:-1]))
    w = params.amplitude.w
    arch_term = (h - params.phi0) / w
    dh_eta = 0.25 * transition * arch_term
    return components_from_arrays(y2, h, dh_phi, dh_eta)


def lambda_from_components(c: ScoreComponents) -> float:
    if c.degenerate:
        raise DegenerateTestError(f"score test unavailable: {c.degenerate}")
    return c.S_tilde**2 / (c.kappa_tilde * c.schur)


def score_test(y, p: int = 1, q: int = 1, config: FitConfig | None = None) -> ScoreTestResult:
    """Fit the restricted model and return ``lambda_s`` with its chi2(1) p-value."""
    config = config or FitConfig()
    restricted = fit(y, "HGARCH", p, q, config, fixed_w=NULL_AMPLITUDE)
    comps = score_components(y, restricted, config.gradient_mode)
    lam = lambda_from_components(comps)
    return ScoreTestResult(lam, chi2_sf(lam, 1), comps, restricted)
