"""Simulation of model paths and the two Monte Carlo experiments.

Each replication ``r`` draws from its own ``numpy.random.Generator(PCG64(base_seed + r))``
(normals via NumPy's ziggurat sampler), so results do not depend on how
replications are scheduled across worker processes.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from tvhgarch.errors import DomainError, NumericalError
from tvhgarch.fracdiff import arch_inf_coeffs
from tvhgarch.model import Logistic, ModelParams, amplitude

logger = logging.getLogger(__name__)

__all__ = [
    "McReport",
    "SimConfig",
    "mc_estimation_experiment",
    "mc_size_power_experiment",
    "simulate_path",
]


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    n: int
    burn_in: int = 1000
    seed: int = 0
    K: int = 1000

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if self.burn_in < 0:
            raise DomainError("burn_in must be >= 0")
        if self.K < 1:
            raise DomainError("K must be >= 1")


def simulate_path(config: SimConfig, return_state: bool = False):
    """Generate ``burn_in + n`` observations and return the last ``n``.

    The recursion starts from an empty history (all presample ``y^2`` are zero),
    so ``h_1 = phi0``. With ``return_state`` the retained ``h`` and ``w`` paths
    are returned as well.
    """
    params = config.params
    coefs = arch_inf_coeffs(params, config.K)
    if not coefs.admissible:
        raise DomainError("parameters give negative ARCH(inf) coefficients")
    phi_rev = coefs.phi[::-1].copy()
    K = config.K
    total = config.burn_in + config.n
    rng = np.random.Generator(np.random.PCG64(config.seed))
    eps = rng.standard_normal(total)
    amp = params.amplitude
    logistic = isinstance(amp, Logistic)
    y2 = np.zeros(total)
    y = np.empty(total)
    h = np.empty(total)
    w = np.empty(total)
    for t in range(total):
        m = min(t, K)
        s = float(phi_rev[K - m :] @ y2[t - m : t]) if m else 0.0
        if logistic:
            w[t] = amplitude(amp.eta, y2[t - 1] if t else 0.0)
        else:
            w[t] = amp.w
        h[t] = coefs.phi0 + w[t] * s
        y[t] = eps[t] * math.sqrt(h[t])
        y2[t] = y[t] * y[t]
    if not np.all(np.isfinite(y)):
        raise NumericalError("simulated path overflowed")
    keep = slice(config.burn_in, total)
    if return_state:
        return y[keep].copy(), h[keep].copy(), w[keep].copy()
    return y[keep].copy()


@dataclass
class McReport:
    """Result of a Monte Carlo experiment.

    ``rows`` holds one dict per table row. For the estimation experiment each
    row is a parameter with ``bias_n<N>``/``rmse_n<N>`` columns; for the
    size/power experiment each row is an ``eta`` with ``rate_n<N>_a<alpha>``
    columns.
    """

    kind: str
    columns: list
    rows: list
    reps: int
    base_seed: int
    excluded: dict = field(default_factory=dict)
    nonconverged: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=dict)

    def cell(self, row_key, column):
        for row in self.rows:
            if row[self.columns[0]] == row_key:
                return row[column]
        raise KeyError(row_key)

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_fmt(row[c]) for c in self.columns))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        title = ("Estimation experiment (Bias, RMSE)" if self.kind == "estimation"
                 else "Score test empirical rejection rates")
        widths = [max(len(c), 10) for c in self.columns]
        out = [title, f"replications={self.reps} base_seed={self.base_seed}"]
        out.append("  ".join(c.rjust(w) for c, w in zip(self.columns, widths)))
        for row in self.rows:
            cells = []
            for c, w in zip(self.columns, widths):
                v = row[c]
                cells.append((f"{v:.4f}" if isinstance(v, float) else str(v)).rjust(w))
            out.append("  ".join(cells))
        if any(self.excluded.values()):
            out.append("excluded replications: " + ", ".join(
                f"{k}={v}" for k, v in self.excluded.items()))
        if any(self.nonconverged.values()):
            out.append("non-converged fits (kept): " + ", ".join(
                f"{k}={v}" for k, v in self.nonconverged.items()))
        return "\n".join(out) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _run_tasks(func: Callable, tasks: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def _estimation_task(task):
    from tvhgarch.estimate import Parameterization, fit

    params, n, seed, burn_in, K, config = task
    try:
        y = simulate_path(SimConfig(params, n, burn_in, seed, K))
        result = fit(y, params.variant, params.p, params.q, config)
    except (DomainError, NumericalError) as exc:
        logger.info("replication seed=%d n=%d failed: %s", seed, n, exc)
        return None
    spec = Parameterization(params.variant, params.p, params.q)
    return spec.vector(result.params), result.converged


def mc_estimation_experiment(
    true_params: ModelParams,
    n_grid: Iterable[int] = (300, 500, 1000),
    reps: int = 200,
    base_seed: int = 0,
    config=None,
    jobs: int = 1,
    burn_in: int = 1000,
    K: int = 1000,
) -> McReport:
    """Simulate ``reps`` paths per sample size, refit, and tabulate Bias and RMSE."""
    from tvhgarch.estimate import FitConfig, Parameterization

    if reps < 1:
        raise DomainError("reps must be >= 1")
    config = config or FitConfig()
    n_grid = list(n_grid)
    spec = Parameterization(true_params.variant, true_params.p, true_params.q)
    truth = spec.vector(true_params)
    columns = ["parameter", "true_value"]
    for n in n_grid:
        columns += [f"bias_n{n}", f"rmse_n{n}"]
    rows = [{"parameter": name, "true_value": float(v)} for name, v in zip(spec.names, truth)]
    excluded, nonconverged, estimates = {}, {}, {}
    for n in n_grid:
        tasks = [(true_params, n, base_seed + r, burn_in, K, config) for r in range(reps)]
        results = _run_tasks(_estimation_task, tasks, jobs)
        ok = [res for res in results if res is not None]
        excluded[n] = len(results) - len(ok)
        nonconverged[n] = sum(1 for _, conv in ok if not conv)
        est = np.array([v for v, _ in ok]) if ok else np.empty((0, len(truth)))
        estimates[n] = est
        err = est - truth
        bias = err.mean(axis=0) if len(est) else np.full(len(truth), math.nan)
        rmse = np.sqrt((err**2).mean(axis=0)) if len(est) else np.full(len(truth), math.nan)
        for j, row in enumerate(rows):
            row[f"bias_n{n}"] = float(bias[j])
            row[f"rmse_n{n}"] = float(rmse[j])
    return McReport("estimation", columns, rows, reps, base_seed, excluded, nonconverged,
                    estimates)


def _size_power_task(task):
    from tvhgarch.errors import DegenerateTestError
    from tvhgarch.scoretest import score_test

    params, n, seed, burn_in, K, config = task
    try:
        y = simulate_path(SimConfig(params, n, burn_in, seed, K))
        return score_test(y, params.p, params.q, config).lambda_s
    except DegenerateTestError:
        return "degenerate"
    except (DomainError, NumericalError) as exc:
        logger.info("replication seed=%d n=%d failed: %s", seed, n, exc)
        return None


def mc_size_power_experiment(
    phi_true: ModelParams,
    eta_grid: Iterable[float] = (0.0, 0.4, 1.5, 3.0),
    n_grid: Iterable[int] = (300, 500, 1000),
    alpha_grid: Iterable[float] = (0.05, 0.10),
    reps: int = 200,
    base_seed: int = 0,
    config=None,
    jobs: int = 1,
    burn_in: int = 1000,
    K: int = 1000,
) -> McReport:
    """Empirical rejection rates of the score test; ``eta = 0`` gives the size."""
    from tvhgarch.estimate import FitConfig
    from tvhgarch.statfn import chi2_isf

    if reps < 1:
        raise DomainError("reps must be >= 1")
    config = config or FitConfig()
    n_grid, alpha_grid = list(n_grid), list(alpha_grid)
    columns = ["eta"] + [f"rate_n{n}_a{a:g}" for n in n_grid for a in alpha_grid]
    rows, excluded, estimates = [], {}, {}
    for eta in eta_grid:
        params = phi_true.with_amplitude(Logistic(eta))
        row = {"eta": float(eta)}
        for n in n_grid:
            tasks = [(params, n, base_seed + r, burn_in, K, config) for r in range(reps)]
            results = _run_tasks(_size_power_task, tasks, jobs)
            lams = np.array([v for v in results if isinstance(v, float)])
            excluded[f"eta={eta:g},n={n},degenerate"] = sum(1 for v in results if v == "degenerate")
            excluded[f"eta={eta:g},n={n},failed"] = sum(1 for v in results if v is None)
            estimates[(float(eta), n)] = lams
            for a in alpha_grid:
                rate = float(np.mean(lams > chi2_isf(a, 1))) if len(lams) else math.nan
                row[f"rate_n{n}_a{a:g}"] = rate
        rows.append(row)
    return McReport("size_power", columns, rows, reps, base_seed, excluded, {}, estimates)
