"""TV-HGARCH: hyperbolic GARCH with logistic time-varying amplitude.

FIGARCH and HGARCH are nested as constant-amplitude special cases.
"""

from tvhgarch.errors import DegenerateTestError, DomainError, NumericalError
from tvhgarch.estimate import FitConfig, FitResult, fit, standard_errors
from tvhgarch.fracdiff import arch_inf_coeffs, frac_weights
from tvhgarch.model import Fixed, Logistic, ModelParams, filter_variance
from tvhgarch.risk import backtest, forecast_var, lr_cc, lr_ind, lr_uc
from tvhgarch.scoretest import score_test
from tvhgarch.simulate import SimConfig, simulate_path

__version__ = "0.1.0"

__all__ = [
    "DegenerateTestError",
    "DomainError",
    "FitConfig",
    "FitResult",
    "Fixed",
    "Logistic",
    "ModelParams",
    "NumericalError",
    "SimConfig",
    "arch_inf_coeffs",
    "backtest",
    "filter_variance",
    "fit",
    "forecast_var",
    "frac_weights",
    "lr_cc",
    "lr_ind",
    "lr_uc",
    "score_test",
    "simulate_path",
    "standard_errors",
]
