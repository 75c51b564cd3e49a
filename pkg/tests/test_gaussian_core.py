import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from kolgauss import (BoundParams, DomainError, GridSpec, InitialDatum, ModelSpec, Nonlinearity,
                      diagonal_bound_params, lambda_diag, qt_diag, qt_inv_sqrt_diag,
                      semigroup_diag, xi_diag)
from kolgauss.errors import ConfigError
from kolgauss.gaussian_core import lambda_norm

from conftest import make_model


class TestModelSpec:
    def test_default_spectrum_is_squares(self):
        m = make_model(d=4)
        np.testing.assert_array_equal(m.spectrum, [1.0, 4.0, 9.0, 16.0])

    def test_arrays_are_read_only(self):
        m = make_model()
        with pytest.raises(ValueError):
            m.x0[0] = 5.0

    @pytest.mark.parametrize("kwargs", [
        {"sigma": 0.0}, {"sigma": -1.0}, {"T": 0.0}, {"x0": [1.0, 2.0]},
        {"spectrum": [1.0, -1.0, 2.0]},
    ])
    def test_invalid_fields_rejected(self, kwargs):
        with pytest.raises((ConfigError, DomainError, ValueError)):
            make_model(**kwargs)


class TestGridSpec:
    def test_defaults(self):
        g = GridSpec.from_horizon(1.0)
        assert g.n_coarse == 100 and g.steps_per_node == 100 and g.n_fine == 10_000
        np.testing.assert_allclose(g.times()[-1], 1.0)

    def test_fine_step_must_divide_coarse(self):
        with pytest.raises(ConfigError):
            GridSpec.from_horizon(1.0, fine_dt=3e-3, coarse_dt=1e-2)

    def test_fine_larger_than_coarse_rejected(self):
        with pytest.raises(ConfigError):
            GridSpec.from_horizon(1.0, fine_dt=2e-2, coarse_dt=1e-2)


class TestClosedForms:
    def test_qt_unit(self):
        m = make_model(d=1)
        assert qt_diag(1.0, 1, m) == pytest.approx(0.4323323583816936, rel=1e-12)
        num, _ = quad(lambda s: math.exp(-2 * s), 0, 1)
        assert qt_diag(1.0, 1, m) == pytest.approx(num, rel=1e-10)

    def test_qt_second_mode_sigma_two(self):
        m = make_model(d=2, sigma=2.0)
        assert qt_diag(1.0, 2, m) == pytest.approx(0.5 * (1 - math.exp(-8)), rel=1e-13)
        assert qt_diag(1.0, 2, m) == pytest.approx(0.4998323, abs=1e-7)
        num, _ = quad(lambda s: 4 * math.exp(-8 * s), 0, 1)
        assert qt_diag(1.0, 2, m) == pytest.approx(num, rel=1e-10)

    def test_lambda_unit(self):
        m = make_model(d=1)
        exact = math.sqrt(2) * math.exp(-1) / math.sqrt(1 - math.exp(-2))
        assert lambda_diag(1.0, 1, m) == pytest.approx(exact, rel=1e-13)
        assert lambda_diag(1.0, 1, m) == pytest.approx(0.5594956, abs=1e-7)
        assert lambda_diag(1.0, 1, m) == pytest.approx(qt_diag(1.0, 1, m) ** -0.5 * math.exp(-1),
                                                       rel=1e-13)

    def test_inv_sqrt(self):
        m = make_model(d=1)
        exact = 1.0 / math.sqrt(0.5 * (1 - math.exp(-2)))
        assert qt_inv_sqrt_diag(1.0, 1, m) == pytest.approx(exact, rel=1e-13)
        assert qt_inv_sqrt_diag(1.0, 1, m) == pytest.approx(1.5208666, abs=1e-7)

    def test_qt_monotone_in_t(self):
        m = make_model(d=3)
        ts = np.linspace(0.01, 3.0, 50)
        for k in (1, 2, 3):
            vals = [qt_diag(t, k, m) for t in ts]
            assert np.all(np.diff(vals) >= 0)
            assert vals[1] > vals[0]

    @pytest.mark.parametrize("t", [0.0, -0.5])
    def test_singular_at_zero(self, t):
        m = make_model(d=1)
        for fn in (qt_diag, lambda_diag, qt_inv_sqrt_diag):
            with pytest.raises(DomainError):
                fn(t, 1, m)

    def test_semigroup_at_zero_is_identity(self):
        assert semigroup_diag(0.0, 2, make_model(d=2)) == 1.0

    def test_lambda_blow_up_rate(self):
        m = make_model(d=5, sigma=0.7)
        for t in (1e-2, 1e-4, 1e-6):
            assert lambda_norm(t, m) * m.sigma * math.sqrt(t) == pytest.approx(1.0, rel=5e-2)

    def test_lambda_bounded_by_delta_half(self):
        m = make_model(d=6, sigma=1.3)
        for t in np.geomspace(1e-6, 5.0, 40):
            assert lambda_norm(t, m) <= 1.0 / (m.sigma * math.sqrt(t)) * (1 + 1e-12)

    def test_xi_factorises_random(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            d = int(rng.integers(1, 8))
            m = make_model(d=d, sigma=float(rng.uniform(0.1, 3.0)))
            t = float(rng.uniform(1e-4, 3.0))
            k = int(rng.integers(1, d + 1))
            lhs = xi_diag(t, k, m)
            rhs = m.sigma * qt_inv_sqrt_diag(t, k, m) * lambda_diag(t, k, m)
            assert lhs == pytest.approx(rhs, rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(t=st.floats(1e-5, 1.5), sigma=st.floats(0.05, 5.0), k=st.integers(1, 20))
    def test_positivity(self, t, sigma, k):
        # t * a_k stays below the exp underflow threshold
        m = make_model(d=20, sigma=sigma)
        assert qt_diag(t, k, m) > 0
        assert lambda_diag(t, k, m) > 0


class TestBoundParams:
    def test_diagonal_constants(self):
        m = make_model(sigma=0.5)
        bp = diagonal_bound_params(m, 1.0, 2.0)
        assert bp.delta == 0.5 and bp.c_delta == pytest.approx(2.0)

    @pytest.mark.parametrize("delta", [0.0, 1.0, -0.1])
    def test_delta_range(self, delta):
        with pytest.raises((ConfigError, DomainError, ValueError)):
            BoundParams(delta=delta, c_delta=1.0, u0_sup=1.0, b_sup=1.0)
