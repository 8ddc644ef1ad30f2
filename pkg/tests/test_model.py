import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tvhgarch.errors import DomainError, NumericalError, UnsupportedOrderError
from tvhgarch.fracdiff import frac_weights
from tvhgarch.model import (
    Fixed,
    Logistic,
    ModelParams,
    amplitude,
    amplitude_derivative,
    check_general_moment_condition,
    check_second_moment_condition,
    filter_variance,
)

from oracles import figarch_recursion_variance


class TestAmplitude:
    def test_zero_eta_gives_half(self):
        for x in (0.0, 1.0, 1e8):
            assert amplitude(0.0, x) == 0.5

    def test_zero_transition_gives_half(self):
        assert amplitude(1.0, 0.0) == 0.5

    def test_saturates_without_overflow(self):
        with np.errstate(over="raise"):
            assert amplitude(3.0, 1e6) == 1.0

    def test_derivative_at_zero(self):
        assert amplitude_derivative(0.0, 2.0) == pytest.approx(0.5)

    @given(eta=st.floats(0.01, 20), x=st.floats(0, 50), dx=st.floats(0, 50))
    def test_monotone_in_transition(self, eta, x, dx):
        assert amplitude(eta, x + dx) >= amplitude(eta, x)


class TestParams:
    def test_variant_labels(self):
        assert ModelParams(0.3, 0.4, 0.2, 0.7).variant == "FIGARCH"
        assert ModelParams(0.3, 0.4, 0.2, 0.7, Fixed(0.9)).variant == "HGARCH"
        assert ModelParams(0.3, 0.4, 0.2, 0.7, Logistic(1.0)).variant == "TV-HGARCH"

    @pytest.mark.parametrize("kwargs", [
        dict(gamma=0.0, beta=0.4, delta=0.2, d=0.5),
        dict(gamma=0.3, beta=0.4, delta=0.2, d=1.0),
        dict(gamma=0.3, beta=(0.6, 0.5), delta=0.2, d=0.5),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            ModelParams(**kwargs)

    @pytest.mark.parametrize("amp", [lambda: Fixed(0.0), lambda: Fixed(1.2), lambda: Logistic(-1)])
    def test_invalid_amplitude(self, amp):
        with pytest.raises(DomainError):
            amp()

    def test_phi0(self):
        assert ModelParams(0.3, 0.4, 0.2, 0.7).phi0 == pytest.approx(0.5)


class TestFilter:
    def test_zero_series_gives_phi0(self):
        params = ModelParams(0.3, 0.4, 0.2, 0.7, Logistic(2.0))
        path = filter_variance(np.zeros(50), params)
        np.testing.assert_array_equal(path.h, np.full(50, 0.5))

    def test_first_variance_uses_presample_proxy(self):
        y = np.array([1.0, -2.0, 0.5])
        params = ModelParams(0.3, 0.4, 0.2, 0.7, Fixed(0.8))
        h = filter_variance(y, params, K=2).h
        from tvhgarch.fracdiff import arch_inf_coeffs
        c = arch_inf_coeffs(params, 2)
        proxy = np.mean(y**2)
        assert h[0] == pytest.approx(c.phi0 + 0.8 * (c.phi[0] + c.phi[1]) * proxy)
        assert h[2] == pytest.approx(c.phi0 + 0.8 * (c.phi[0] * 4.0 + c.phi[1] * 1.0))

    def test_saturated_logistic_equals_figarch(self):
        rng = np.random.default_rng(1)
        y = np.abs(rng.standard_normal(300)) + 0.1
        a = filter_variance(y, ModelParams(0.3, 0.4, 0.2, 0.7, Fixed(1.0))).h
        b = filter_variance(y, ModelParams(0.3, 0.4, 0.2, 0.7, Logistic(1e9))).h
        np.testing.assert_allclose(a, b, rtol=1e-6)

    def test_constant_amplitude_matches_recursion(self, hgarch_series):
        y = hgarch_series
        gamma, beta, delta, d, w = 0.3, 0.4, 0.2, 0.7, 0.6
        params = ModelParams(gamma, beta, delta, d, Fixed(w))
        h = filter_variance(y, params, K=len(y), presample="zero").h
        ref = figarch_recursion_variance(y, gamma, beta, delta, d, w)
        np.testing.assert_allclose(h, ref, rtol=1e-6)

    def test_logistic_zero_equals_half(self, tv_series):
        a = filter_variance(tv_series, ModelParams(0.3, 0.4, 0.2, 0.7, Logistic(0.0))).h
        b = filter_variance(tv_series, ModelParams(0.3, 0.4, 0.2, 0.7, Fixed(0.5))).h
        np.testing.assert_array_equal(a, b)

    def test_monotone_in_amplitude(self, tv_series):
        base = ModelParams(0.3, 0.4, 0.2, 0.7)
        paths = [filter_variance(tv_series, base.with_amplitude(Fixed(w))).h
                 for w in (0.2, 0.5, 0.9, 1.0)]
        for lo, hi in zip(paths, paths[1:]):
            assert np.all(hi >= lo)

    def test_deterministic(self, tv_series):
        params = ModelParams(0.3, 0.4, 0.2, 0.7, Logistic(1.0))
        a = filter_variance(tv_series, params).h
        b = filter_variance(tv_series, params).h
        assert a.tobytes() == b.tobytes()

    def test_positivity_and_amplitude_range(self, tv_series):
        path = filter_variance(tv_series, ModelParams(0.3, 0.4, 0.2, 0.7, Logistic(1.0)))
        assert np.all(path.h >= 0.5)
        # nonnegative eta keeps w in [1/2, 1]; large transitions round to 1.0
        assert np.all((path.w >= 0.5) & (path.w <= 1))

    def test_positivity_floor_raises(self):
        params = ModelParams(0.01, 0.95, 0.0, 0.05)
        y = np.full(200, 5.0)
        with pytest.raises(NumericalError):
            filter_variance(y, params, K=150)

    def test_empty_series_rejected(self):
        with pytest.raises(DomainError):
            filter_variance(np.array([]), ModelParams(0.3, 0.4, 0.2, 0.7))


class TestMomentConditions:
    def test_delta_zero_telescopes(self):
        params = ModelParams(0.3, 0.4, 0.0, 0.5)
        K = 5000
        holds, bound = check_second_moment_condition(params, K)
        total = frac_weights(0.5, K).weights.sum()
        assert holds
        assert bound == pytest.approx(0.3 / (1 - total), rel=1e-9)

    def test_matches_direct_summation(self):
        params = ModelParams(0.3, 0.4, 0.2, 0.7)
        K = 10_000
        g = frac_weights(0.7, K).weights
        total = 0.2 + g[0]
        for i in range(1, K):
            total += g[i] - 0.2 * g[i - 1]
        holds, bound = check_second_moment_condition(params, K)
        assert holds == (total < 1)
        assert bound == pytest.approx(0.3 / (1 - total), rel=1e-8)

    def test_boundary_robust(self):
        holds, bound = check_second_moment_condition(ModelParams(0.3, 0.4, 0.99, 0.01), 1000)
        assert (holds and math.isfinite(bound)) or (not holds)

    def test_requires_one_one(self):
        with pytest.raises(UnsupportedOrderError):
            check_second_moment_condition(ModelParams(0.3, (0.2, 0.1), 0.2, 0.7), 100)

    def test_general_first_moment(self):
        params = ModelParams(0.3, 0.4, 0.2, 0.7)
        holds, S, mu = check_general_moment_condition(params, 1, 500)
        assert mu == 1.0
        assert holds == (S < 1)

    def test_gaussian_fourth_moment(self):
        _, _, mu = check_general_moment_condition(ModelParams(0.3, 0.4, 0.2, 0.7), 2, 50)
        assert mu == 3.0

    def test_condition_arithmetic(self):
        # S = 0.5 exactly for a single lag with phi_1 = d = 0.5
        holds, S, mu = check_general_moment_condition(ModelParams(0.3, (), (), 0.5), 2, 1)
        assert S == 0.5 and S**2 * mu == 0.75 and holds

    def test_invalid_m(self):
        with pytest.raises(DomainError):
            check_general_moment_condition(ModelParams(0.3, 0.4, 0.2, 0.7), 0, 10)
