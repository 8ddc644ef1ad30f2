"""Command-line interface.

Exit status: 0 success, 2 usage or configuration error, 3 data error,
4 numerical failure, 5 score test unavailable (degenerate statistic).
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tvhgarch.dataio import (
    ConfigError,
    DataError,
    parse_config,
    read_returns,
    write_columns,
    write_table,
)
from tvhgarch.errors import DegenerateTestError, DomainError, NumericalError
from tvhgarch.estimate import VARIANTS, FitConfig, FitResult, fit
from tvhgarch.model import Fixed, Logistic, ModelParams, filter_variance
from tvhgarch.risk import (
    backtest,
    descriptive_stats,
    exceptions,
    fit_metrics,
    forecast_var,
)
from tvhgarch.scoretest import score_test
from tvhgarch.simulate import (
    SimConfig,
    mc_estimation_experiment,
    mc_size_power_experiment,
    simulate_path,
)

logger = logging.getLogger("tvhgarch")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_DEGENERATE = 0, 2, 3, 4, 5
MIN_TEST_LENGTH = 50


@dataclass
class RunConfig:
    input: str | None = None
    column: str | None = None
    split: int = 1000
    variants: tuple = VARIANTS
    p: int = 1
    q: int = 1
    K: int | None = None
    levels: tuple = (0.05, 0.10)
    quantile_source: str = "gaussian"
    seed: int = 0
    output_dir: str = "out"
    demean: bool = False
    gradient_mode: str = "analytic"
    multistart: int = 1
    max_iterations: int = 500
    jobs: int = 1
    no_timestamp: bool = False
    exceptions: str | None = None
    # simulation / experiment block
    experiment: str = "estimation"
    n: int = 1000
    reps: int = 200
    n_grid: tuple = (300, 500, 1000)
    eta_grid: tuple = (0.0, 0.4, 1.5, 3.0)
    alpha_grid: tuple = (0.05, 0.10)
    gamma: float = 0.3
    beta: tuple = (0.4,)
    delta: tuple = (0.2,)
    d: float = 0.7
    eta: float | None = 1.0
    w: float | None = None
    burn_in: int = 1000
    sim_K: int = 1000
    output: str | None = None

    def fit_config(self) -> FitConfig:
        return FitConfig(K=self.K, max_iterations=self.max_iterations,
                         gradient_mode=self.gradient_mode, multistart=self.multistart,
                         seed=self.seed)

    def true_params(self) -> ModelParams:
        if self.w is not None:
            amp = Fixed(self.w)
        elif self.eta is not None:
            amp = Logistic(self.eta)
        else:
            amp = Fixed(1.0)
        return ModelParams(self.gamma, self.beta, self.delta, self.d, amp)

    def validate(self) -> None:
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}; choose from {', '.join(VARIANTS)}")
        for rho in self.levels:
            if not 0.0 < rho < 0.5:
                raise ConfigError(f"VaR levels must lie in (0, 0.5), got {rho}")
        if self.quantile_source not in ("gaussian", "empirical"):
            raise ConfigError("quantile_source must be 'gaussian' or 'empirical'")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.split < 1:
            raise ConfigError("split must be >= 1")
        if self.experiment not in ("estimation", "size"):
            raise ConfigError("experiment must be 'estimation' or 'size'")


def _parse_list(cast):
    def parse(text: str) -> tuple:
        items = [s.strip() for s in str(text).split(",") if s.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(cast(s) for s in items)
    return parse


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional(cast):
    def parse(text):
        if str(text).strip().lower() in ("", "none", "-"):
            return None
        return cast(text)
    return parse


_CASTS = {
    "input": str, "column": _optional(str), "split": int,
    "variants": _parse_list(str.upper), "p": int, "q": int, "K": _optional(int),
    "levels": _parse_list(float), "quantile_source": str, "seed": int, "output_dir": str,
    "demean": _parse_bool, "gradient_mode": str, "multistart": int, "max_iterations": int,
    "jobs": int, "no_timestamp": _parse_bool, "exceptions": _optional(str),
    "experiment": str, "n": int, "reps": int, "n_grid": _parse_list(int),
    "eta_grid": _parse_list(float), "alpha_grid": _parse_list(float), "gamma": float,
    "beta": _parse_list(float), "delta": _parse_list(float), "d": float,
    "eta": _optional(float), "w": _optional(float), "burn_in": int, "sim_K": int,
    "output": _optional(str),
}
_KEY_ALIASES = {"k": "K", "sim_k": "sim_K"}


def _apply(cfg: RunConfig, key: str, value, origin: str) -> None:
    key = _KEY_ALIASES.get(key, key)
    if key not in _CASTS:
        raise ConfigError(f"{origin}: unknown setting {key!r}")
    try:
        setattr(cfg, key, _CASTS[key](value))
    except ValueError as exc:
        raise ConfigError(f"{origin}: bad value for {key!r}: {exc}") from None


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        for key, value in parse_config(args.config).items():
            _apply(cfg, key, value, f"config {args.config}")
    for f in dataclasses.fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            _apply(cfg, f.name, value, f"--{f.name.replace('_', '-')}")
    if cfg.variants:
        cfg.variants = tuple(v.replace("TVHGARCH", "TV-HGARCH") for v in cfg.variants)
    cfg.validate()
    return cfg


# ----------------------------------------------------------------------------
# helpers


class Reporter:
    def __init__(self, cfg: RunConfig, name: str):
        self.cfg = cfg
        self.dir = Path(cfg.output_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.name = name
        self.lines: list[str] = []

    def say(self, text: str = "") -> None:
        self.lines.append(text)
        print(text)

    def path(self, filename: str) -> Path:
        return self.dir / filename

    def close(self) -> None:
        header = [] if self.cfg.no_timestamp else [
            f"# generated {_dt.datetime.now().isoformat(timespec='seconds')}"]
        self.path(f"{self.name}.txt").write_text("\n".join(header + self.lines) + "\n",
                                                 encoding="utf-8")


def _load_split(cfg: RunConfig):
    if not cfg.input:
        raise ConfigError("no input file given (--input)")
    y = read_returns(cfg.input, cfg.column, cfg.demean)
    if cfg.split >= len(y):
        raise ConfigError(f"split ({cfg.split}) must be smaller than the series length ({len(y)})")
    return y, y[: cfg.split], y[cfg.split:]


def _param_rows(fits: dict[str, FitResult | None], p: int, q: int):
    names = ["gamma"] + [f"beta[{i + 1}]" for i in range(p)] + \
        [f"delta[{j + 1}]" for j in range(q)] + ["d", "eta", "w"]
    rows = []
    for name in names:
        row = [name]
        for result in fits.values():
            row.append(None if result is None else result.params.as_dict().get(name))
        rows.append(row)
    return rows


def _fmt_cell(v, width=11) -> str:
    if v is None:
        return "-".rjust(width)
    if isinstance(v, float):
        return f"{v:.4f}".rjust(width)
    return str(v).rjust(width)


def _fit_all(cfg: RunConfig, y_in, rep: Reporter) -> dict[str, FitResult | None]:
    fits = {}
    for variant in cfg.variants:
        try:
            fits[variant] = fit(y_in, variant, cfg.p, cfg.q, cfg.fit_config())
        except (DomainError, NumericalError) as exc:
            rep.say(f"{variant}: fit failed: {exc}")
            fits[variant] = None
    return fits


def _write_fit_tables(cfg, fits, y_in, rep: Reporter) -> None:
    names = list(fits)
    rows = _param_rows(fits, cfg.p, cfg.q)
    rows.append(["loglik"] + [None if f is None else f.loglik for f in fits.values()])
    rows.append(["converged"] + [None if f is None else int(f.converged) for f in fits.values()])
    write_table(rep.path("fit_params.csv"), ["parameter"] + names, rows)
    rep.say("Maximum likelihood estimates (in-sample, T=%d)" % len(y_in))
    rep.say("parameter".ljust(11) + "".join(n.rjust(11) for n in names))
    for row in rows:
        rep.say(str(row[0]).ljust(11) + "".join(_fmt_cell(v) for v in row[1:]))

    metric_rows, plot = [], {"t": np.arange(1, len(y_in) + 1), "y2": y_in**2}
    for name, result in fits.items():
        if result is None:
            continue
        h = filter_variance(y_in, result.params, result.K, result.presample).h
        rmse, llv = fit_metrics(y_in, h)
        metric_rows.append([name, "in-sample", rmse, llv])
        plot[f"h_{name}"] = h
    write_table(rep.path("fit_metrics.csv"), ["model", "segment", "rmse", "llv"], metric_rows)
    write_columns(rep.path("plot_insample.csv"), plot)
    rep.say()
    rep.say("In-sample RMSE / LLV")
    for name, _, rmse, llv in metric_rows:
        rep.say(f"{name:<11}{rmse:11.4f}{llv:13.2f}")


# ----------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: RunConfig) -> int:
    params = cfg.true_params()
    y = simulate_path(SimConfig(params, cfg.n, cfg.burn_in, cfg.seed, cfg.sim_K))
    out = Path(cfg.output) if cfg.output else Path(cfg.output_dir) / "simulated.csv"
    write_columns(out, {"return": y})
    print(f"wrote {len(y)} observations from {params.variant} to {out}")
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    _, y_in, _ = _load_split(cfg)
    rep = Reporter(cfg, "fit")
    fits = _fit_all(cfg, y_in, rep)
    _write_fit_tables(cfg, fits, y_in, rep)
    rep.close()
    return EXIT_OK if any(f is not None for f in fits.values()) else EXIT_NUMERIC


def _run_score_test(cfg, y_in, rep: Reporter) -> int:
    if len(y_in) < MIN_TEST_LENGTH:
        raise DataError(f"score test needs at least {MIN_TEST_LENGTH} in-sample observations, "
                        f"got {len(y_in)}")
    try:
        result = score_test(y_in, cfg.p, cfg.q, cfg.fit_config())
    except DegenerateTestError as exc:
        rep.say(f"Score test unavailable: {exc}")
        write_table(rep.path("score_test.csv"), ["lambda_s", "p_value", "verdict"],
                    [[None, None, "unavailable"]])
        return EXIT_DEGENERATE
    verdict = "reject H0" if result.reject(0.05) else "fail to reject H0"
    rep.say("Score test for time-varying amplitude (H0: eta = 0)")
    rep.say(f"lambda_s = {result.lambda_s:.4f}   p-value = {result.p_value:.4f}   "
            f"critical value (5%) = 3.84   verdict: {verdict}")
    write_table(rep.path("score_test.csv"),
                ["lambda_s", "p_value", "S_tilde", "kappa_tilde", "Q", "verdict"],
                [[result.lambda_s, result.p_value, result.S_tilde, result.kappa_tilde,
                  result.components.Q, verdict]])
    return EXIT_OK


def cmd_test_tva(cfg: RunConfig) -> int:
    _, y_in, _ = _load_split(cfg)
    rep = Reporter(cfg, "test_tva")
    code = _run_score_test(cfg, y_in, rep)
    rep.close()
    return code


def _forecast_all(cfg, fits, y_in, y_out, rep: Reporter):
    if len(y_out) == 0:
        raise DataError("out-of-sample segment is empty")
    forecasts = {}
    columns = {"t": np.arange(len(y_in) + 1, len(y_in) + len(y_out) + 1), "y": y_out}
    plot = {"t": columns["t"], "y2": y_out**2}
    errors = {"t": columns["t"]}
    metric_rows = []
    for name, result in fits.items():
        if result is None:
            continue
        fc = forecast_var(y_in, y_out, result, cfg.levels, cfg.quantile_source)
        forecasts[name] = fc
        columns[f"sigma_{name}"] = fc.sigma
        for rho in cfg.levels:
            columns[f"var{rho:g}_{name}"] = fc.var_at[rho]
        plot[f"h_{name}"] = fc.h
        errors[f"abs_error_{name}"] = np.abs(y_out**2 - fc.h)
        rmse, llv = fit_metrics(y_out, fc.h)
        metric_rows.append([name, "out-of-sample", rmse, llv])
    write_columns(rep.path("forecast.csv"), columns)
    write_columns(rep.path("plot_outsample.csv"), plot)
    write_columns(rep.path("plot_abs_errors.csv"), errors)
    write_table(rep.path("forecast_metrics.csv"), ["model", "segment", "rmse", "llv"], metric_rows)
    rep.say()
    rep.say("Out-of-sample RMSE / LLV (T=%d)" % len(y_out))
    for name, _, rmse, llv in metric_rows:
        rep.say(f"{name:<11}{rmse:11.4f}{llv:13.2f}")
    return forecasts


def cmd_forecast(cfg: RunConfig) -> int:
    _, y_in, y_out = _load_split(cfg)
    rep = Reporter(cfg, "forecast")
    fits = _fit_all(cfg, y_in, rep)
    _forecast_all(cfg, fits, y_in, y_out, rep)
    rep.close()
    return EXIT_OK


def _write_backtests(reports: dict, rep: Reporter) -> None:
    """``reports`` maps (model, rho) to a BacktestReport."""
    rows = []
    for (model, rho), r in reports.items():
        rows.append([model, rho, r.T, r.expected, r.n, r.n00, r.n01, r.n10, r.n11,
                     r.lr_uc, r.p_uc, int(r.pass_uc), r.lr_ind, r.p_ind, int(r.pass_ind),
                     r.lr_cc, r.p_cc, int(r.pass_cc), int(r.degenerate)])
    write_table(rep.path("backtest.csv"),
                ["model", "rho", "T", "expected", "exceptions", "n00", "n01", "n10", "n11",
                 "lr_uc", "p_uc", "pass_uc", "lr_ind", "p_ind", "pass_ind",
                 "lr_cc", "p_cc", "pass_cc", "degenerate"], rows)
    keys = list(reports)
    rep.say()
    rep.say("VaR backtests (* = passes at the 5% level)")
    rep.say("".ljust(8) + "".join(f"{m}".rjust(12) for m, _ in keys))
    rep.say("".ljust(8) + "".join(f"VaR({rho:g})".rjust(12) for _, rho in keys))

    def mark(value, ok):
        return (f"{value:.3f}" + ("*" if ok else " ")).rjust(12)

    rep.say("Ex.e".ljust(8) + "".join(f"{reports[k].expected:g} ".rjust(12) for k in keys))
    rep.say("Em.e".ljust(8) + "".join(f"{reports[k].n} ".rjust(12) for k in keys))
    rep.say("LR_UC".ljust(8) + "".join(mark(reports[k].lr_uc, reports[k].pass_uc) for k in keys))
    rep.say("LR_IND".ljust(8) + "".join(mark(reports[k].lr_ind, reports[k].pass_ind) for k in keys))
    rep.say("LR_CC".ljust(8) + "".join(mark(reports[k].lr_cc, reports[k].pass_cc) for k in keys))


def _exception_file_backtest(cfg: RunConfig, rep: Reporter) -> None:
    hits = read_returns(cfg.exceptions, cfg.column or "exception")
    if len(hits) < 2:
        raise DataError("exception sequence needs at least two entries")
    if not np.all(np.isin(hits, (0.0, 1.0))):
        raise DataError("exception indicators must be 0 or 1")
    reports = {("input", rho): backtest(hits.astype(int), rho) for rho in cfg.levels}
    _write_backtests(reports, rep)


def cmd_backtest(cfg: RunConfig) -> int:
    rep = Reporter(cfg, "backtest")
    if cfg.exceptions:
        _exception_file_backtest(cfg, rep)
        rep.close()
        return EXIT_OK
    _, y_in, y_out = _load_split(cfg)
    fits = _fit_all(cfg, y_in, rep)
    forecasts = _forecast_all(cfg, fits, y_in, y_out, rep)
    reports = {}
    for rho in cfg.levels:
        for name, fc in forecasts.items():
            reports[(name, rho)] = backtest(exceptions(y_out, fc.var_at[rho]), rho)
    reports = dict(sorted(reports.items(), key=lambda kv: (list(forecasts).index(kv[0][0]),
                                                          kv[0][1])))
    _write_backtests(reports, rep)
    rep.close()
    return EXIT_OK


def cmd_mc(cfg: RunConfig) -> int:
    rep = Reporter(cfg, "mc")
    fc = cfg.fit_config()
    if cfg.experiment == "estimation":
        report = mc_estimation_experiment(cfg.true_params(), cfg.n_grid, cfg.reps, cfg.seed, fc,
                                          cfg.jobs, cfg.burn_in, cfg.sim_K)
        filename = "mc_estimation.csv"
    else:
        base = ModelParams(cfg.gamma, cfg.beta, cfg.delta, cfg.d)
        report = mc_size_power_experiment(base, cfg.eta_grid, cfg.n_grid, cfg.alpha_grid,
                                          cfg.reps, cfg.seed, fc, cfg.jobs, cfg.burn_in,
                                          cfg.sim_K)
        filename = "mc_size_power.csv"
    rep.path(filename).write_text(report.to_csv(), encoding="utf-8")
    for line in report.to_text().rstrip("\n").splitlines():
        rep.say(line)
    rep.close()
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    y, y_in, y_out = _load_split(cfg)
    rep = Reporter(cfg, "report")
    s = descriptive_stats(y)
    header = ["n", "mean", "std_dev", "minimum", "maximum", "skewness",
              "excess_kurtosis", "raw_kurtosis"]
    values = [s.n, s.mean, s.std_dev, s.minimum, s.maximum, s.skewness,
              s.excess_kurtosis, s.raw_kurtosis]
    write_table(rep.path("descriptive.csv"), header, [values])
    rep.say("Descriptive statistics")
    rep.say("".join(h.rjust(16) for h in header))
    rep.say("".join(_fmt_cell(v, 16) for v in values))
    rep.say()
    fits = _fit_all(cfg, y_in, rep)
    _write_fit_tables(cfg, fits, y_in, rep)
    rep.say()
    code = _run_score_test(cfg, y_in, rep) if len(y_in) >= MIN_TEST_LENGTH else EXIT_OK
    forecasts = _forecast_all(cfg, fits, y_in, y_out, rep)
    reports = {}
    for name, fc in forecasts.items():
        for rho in cfg.levels:
            reports[(name, rho)] = backtest(exceptions(y_out, fc.var_at[rho]), rho)
    _write_backtests(reports, rep)
    rep.close()
    return code


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "test-tva": cmd_test_tva,
    "forecast": cmd_forecast,
    "backtest": cmd_backtest,
    "mc": cmd_mc,
    "report": cmd_report,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("run configuration")
    g.add_argument("--config", help="key = value settings file; flags override it")
    g.add_argument("--input", help="CSV with a 'return' column or 'date,price' columns")
    g.add_argument("--column", help="column holding returns (or 'price')")
    g.add_argument("--split", help="number of in-sample observations (default 1000)")
    g.add_argument("--variants", help="comma-separated subset of FIGARCH,HGARCH,TV-HGARCH")
    g.add_argument("--p", help="order of beta(B) (default 1)")
    g.add_argument("--q", help="order of delta(B) (default 1)")
    g.add_argument("--K", "--truncation", dest="K", help="ARCH(inf) truncation lag")
    g.add_argument("--levels", help="VaR levels, comma-separated (default 0.05,0.10)")
    g.add_argument("--quantile-source", choices=["gaussian", "empirical"])
    g.add_argument("--seed", help="random seed (default 0)")
    g.add_argument("--output-dir", help="directory for CSV and text reports (default out)")
    g.add_argument("--demean", action="store_const", const="true",
                   help="subtract the sample mean before fitting")
    g.add_argument("--gradient-mode", choices=["analytic", "central"])
    g.add_argument("--multistart", help="number of optimizer starts")
    g.add_argument("--max-iterations")
    g.add_argument("--jobs", help="worker processes for Monte Carlo replications")
    g.add_argument("--no-timestamp", action="store_const", const="true",
                   help="omit the timestamp header from text reports")
    g.add_argument("--exceptions", help="backtest a 0/1 'exception' column instead of fitting")
    s = parser.add_argument_group("simulation and experiments")
    s.add_argument("--experiment", choices=["estimation", "size"])
    s.add_argument("--n", help="simulated sample length")
    s.add_argument("--reps", help="Monte Carlo replications")
    s.add_argument("--n-grid")
    s.add_argument("--eta-grid")
    s.add_argument("--alpha-grid")
    s.add_argument("--gamma")
    s.add_argument("--beta")
    s.add_argument("--delta")
    s.add_argument("--d")
    s.add_argument("--eta", help="logistic smoothness ('none' for a fixed amplitude)")
    s.add_argument("--w", help="fixed amplitude; overrides --eta")
    s.add_argument("--burn-in")
    s.add_argument("--sim-K", dest="sim_K", help="truncation used while simulating")
    s.add_argument("--output", help="output file for 'simulate'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvhgarch",
        description="Long-memory volatility models with time-varying amplitude.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "simulate a return series",
        "fit": "fit models on the in-sample segment",
        "test-tva": "score test for time-varying amplitude",
        "forecast": "one-step-ahead variance and VaR forecasts",
        "backtest": "VaR backtests (UC, IND, CC)",
        "mc": "Monte Carlo experiments",
        "report": "full pipeline: statistics, fit, test, forecast, backtest",
    }
    for name, text in helps.items():
        _add_common(sub.add_parser(name, help=text))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DomainError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
