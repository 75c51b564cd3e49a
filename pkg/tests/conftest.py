import time

import numpy as np
import pytest

from kolgauss import GridSpec, InitialDatum, ModelSpec, Nonlinearity, simulate_bank


def make_model(d=3, sigma=1.0, T=0.1, nonlinearity=None, datum=None, x0=None, spectrum=None):
    return ModelSpec(d=d, sigma=sigma, horizon_T=T,
                     nonlinearity=nonlinearity if nonlinearity is not None else Nonlinearity.sine(),
                     initial_datum=datum if datum is not None else InitialDatum.threshold(1.0),
                     x0=np.ones(d) if x0 is None else np.asarray(x0, float),
                     spectrum=spectrum)


@pytest.fixture
def small_model():
    return make_model()


@pytest.fixture
def small_grid():
    return GridSpec(fine_dt=1e-3, coarse_dt=1e-2, n_coarse=10)


@pytest.fixture
def small_bank(small_model, small_grid):
    return simulate_bank(small_model, small_grid, 200, seed=3, mode="exact")


DESK_SAMPLES = 10_000


@pytest.fixture(scope="session")
def desk_grid():
    return GridSpec.from_horizon(1.0, fine_dt=1e-4, coarse_dt=1e-2)


@pytest.fixture(scope="session")
def desk_bank_timed(desk_grid):
    """Default d=10 bank at desk scale and its build time in seconds."""
    tick = time.perf_counter()
    bank = simulate_bank(make_model(d=10, T=1.0), desk_grid, DESK_SAMPLES, seed=2024)
    return bank, time.perf_counter() - tick


@pytest.fixture(scope="session")
def desk_bank(desk_bank_timed):
    return desk_bank_timed[0]
