import math

import numpy as np
import pytest

from kolgauss import (GridSpec, InitialDatum, Nonlinearity, closed_form_constant_drift,
                      euler_maruyama_X, mc_reference, simulate_bank, v0_estimate)
from kolgauss.errors import ConfigError, NumericError

from conftest import make_model


class TestEulerMaruyama:
    def test_zero_noise_heat_flow(self):
        model = make_model(d=3, T=0.5, sigma=1e-300, nonlinearity=Nonlinearity.zero(),
                           x0=[1.0, -2.0, 0.5])
        grid = GridSpec.from_horizon(0.5, fine_dt=1e-4, coarse_dt=1e-2)
        X = euler_maruyama_X(model, model.x0, grid, seed=0, n_samples=2)
        exact = np.exp(-np.outer(grid.times(), model.spectrum)) * model.x0
        np.testing.assert_allclose(X[0], exact, atol=5e-4)

    def test_equilibrium_at_attractor(self):
        d = 4
        ybar = 2 * np.ones(d)
        model = make_model(d=d, T=0.1, sigma=1e-300, x0=ybar, spectrum=np.zeros(d) + 1e-300,
                           nonlinearity=Nonlinearity.poly_bounded(ybar, 2))
        grid = GridSpec.from_horizon(0.1, fine_dt=1e-3, coarse_dt=1e-2)
        X = euler_maruyama_X(model, ybar, grid, seed=0, n_samples=3)
        np.testing.assert_allclose(X, np.broadcast_to(ybar, X.shape), rtol=1e-12)

    def test_deterministic(self):
        model = make_model(d=2, T=0.1)
        grid = GridSpec.from_horizon(0.1, fine_dt=1e-3, coarse_dt=1e-2)
        a = euler_maruyama_X(model, model.x0, grid, seed=4, n_samples=20)
        b = euler_maruyama_X(model, model.x0, grid, seed=4, n_samples=20)
        assert a.tobytes() == b.tobytes()

    def test_unstable_rejected(self):
        model = make_model(d=2, T=0.1, spectrum=[1.0, 500.0])
        grid = GridSpec.from_horizon(0.1, fine_dt=1e-2, coarse_dt=1e-2)
        with pytest.raises(ConfigError):
            euler_maruyama_X(model, model.x0, grid, seed=0, n_samples=2)

    def test_blow_up_detected(self):
        model = make_model(d=1, T=0.1, nonlinearity=Nonlinearity.constant([np.inf]))
        grid = GridSpec.from_horizon(0.1, fine_dt=1e-3, coarse_dt=1e-2)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(NumericError):
                euler_maruyama_X(model, model.x0, grid, seed=0, n_samples=2)

    def test_zero_drift_matches_bank_law(self):
        model = make_model(d=3, T=0.5, nonlinearity=Nonlinearity.zero(), sigma=0.7)
        grid = GridSpec.from_horizon(0.5, fine_dt=1e-3, coarse_dt=1e-2)
        X = euler_maruyama_X(model, model.x0, grid, seed=1, n_samples=20_000)[:, -1]
        bank = simulate_bank(model, grid, 20_000, seed=1, mode="exact")
        Z = np.exp(-0.5 * bank.spectrum) * model.x0 + 0.7 * bank.paths[:, -1]
        se = np.sqrt(X.var(axis=0, ddof=1) / X.shape[0] + Z.var(axis=0, ddof=1) / Z.shape[0])
        assert np.all(np.abs(X.mean(axis=0) - Z.mean(axis=0)) <= 3 * se)


class TestReference:
    def test_initial_row_exact(self):
        model = make_model(d=3, T=0.1)
        grid = GridSpec.from_horizon(0.1, fine_dt=1e-3, coarse_dt=1e-2)
        run = mc_reference(model, grid, 50, seed=0)
        assert run.estimate.mean[0] == 1.0 and run.estimate.stderr[0] == 0.0

    def test_reproducible(self):
        model = make_model(d=3, T=0.1)
        grid = GridSpec.from_horizon(0.1, fine_dt=1e-3, coarse_dt=1e-2)
        a = mc_reference(model, grid, 3000, seed=7)
        b = mc_reference(model, grid, 3000, seed=7)
        assert a.estimate.mean.tobytes() == b.estimate.mean.tobytes()

    def test_constant_drift_oracle(self):
        d = 3
        model = make_model(d=d, T=1.0, nonlinearity=Nonlinearity.constant(0.1 * np.ones(d)),
                           datum=InitialDatum.trig(np.ones(d)))
        grid = GridSpec.from_horizon(1.0, fine_dt=1e-3, coarse_dt=1e-2)
        run = mc_reference(model, grid, 20_000, seed=3)
        for j in (25, 100):
            exact = closed_form_constant_drift(model, j * 0.01)
            assert abs(run.estimate.mean[j] - exact) <= 3 * run.estimate.stderr[j] + 2e-3

    def test_zero_drift_agrees_with_v0(self):
        model = make_model(d=3, T=0.5, nonlinearity=Nonlinearity.zero())
        grid = GridSpec.from_horizon(0.5, fine_dt=1e-3, coarse_dt=1e-2)
        run = mc_reference(model, grid, 5000, seed=2)
        bank = simulate_bank(model, grid, 5000, seed=9, mode="exact")
        v0 = v0_estimate(bank, model)
        se = np.hypot(run.estimate.stderr, v0.stderr)
        assert np.all(np.abs(run.estimate.mean - v0.mean) <= 3 * se + 1e-12)


class TestClosedForm:
    def test_long_time_limit(self):
        b, h, sigma = 0.4, 1.5, 0.9
        model = make_model(d=1, T=1.0, sigma=sigma, nonlinearity=Nonlinearity.constant([b]),
                           datum=InitialDatum.trig([h]), x0=[2.0])
        val = closed_form_constant_drift(model, 50.0)
        assert val == pytest.approx(math.cos(h * b) * math.exp(-sigma ** 2 * h ** 2 / 4), rel=1e-12)

    def test_time_zero(self):
        model = make_model(d=2, T=1.0, nonlinearity=Nonlinearity.constant([0.3, 0.1]),
                           datum=InitialDatum.trig([1.0, 2.0]), x0=[0.5, 0.2])
        assert closed_form_constant_drift(model, 0.0) == pytest.approx(math.cos(0.9))

    def test_rejects_other_models(self):
        with pytest.raises(ConfigError):
            closed_form_constant_drift(make_model(d=2), 1.0)
