import pytest

from tvhgarch.model import Fixed, Logistic, ModelParams
from tvhgarch.simulate import SimConfig, mc_size_power_experiment, simulate_path

# Parameter vector of both simulation experiments (gamma, beta, delta, d, eta)
TRUE_THETA = (0.3, 0.4, 0.2, 0.7, 1.0)
MC_BASE_SEED = 20_000


@pytest.fixture
def table_params():
    g, b, dl, d, eta = TRUE_THETA
    return ModelParams(g, b, dl, d, Logistic(eta))


@pytest.fixture(scope="session")
def tv_series():
    g, b, dl, d, eta = TRUE_THETA
    return simulate_path(SimConfig(ModelParams(g, b, dl, d, Logistic(eta)), 1000, seed=11))


@pytest.fixture(scope="session")
def hgarch_series():
    return simulate_path(SimConfig(ModelParams(0.3, 0.4, 0.2, 0.7, Fixed(0.5)), 500, seed=5))


@pytest.fixture(scope="session")
def size_power_n1000():
    """Score-test replications at n=1000: 500 under H0 and 200 for each eta > 0."""
    base = ModelParams(*TRUE_THETA[:4])
    null = mc_size_power_experiment(base, eta_grid=(0.0,), n_grid=(1000,), reps=500,
                                    base_seed=MC_BASE_SEED)
    alt = mc_size_power_experiment(base, eta_grid=(0.4, 1.5, 3.0), n_grid=(1000,), reps=200,
                                   base_seed=MC_BASE_SEED)
    return {"null": null, "alt": alt}


def random_admissible_params(rng, p=1, q=1, amplitude=None, K=200):
    """Draw (gamma, beta, delta, d) with all truncated ARCH(inf) weights >= 0."""
    from tvhgarch.fracdiff import arch_inf_coeffs

    while True:
        beta = rng.uniform(0.0, 0.8 / p, size=p)
        delta = rng.uniform(0.0, 0.6 / q, size=q)
        d = rng.uniform(0.15, 0.9)
        params = ModelParams(rng.uniform(0.1, 1.0), beta, delta, d,
                             amplitude if amplitude is not None else Fixed(1.0))
        if arch_inf_coeffs(params, K).admissible:
            return params


# One line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
