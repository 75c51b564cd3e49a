"""Ground truth: Euler-Maruyama Monte Carlo of the nonlinear SDE and closed forms."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bank import sample_rng
from .errors import ConfigError, NumericError
from .gaussian_core import GridSpec, ModelSpec, unit_variance
from .iteration import Estimate
from .model_zoo import eval_B, eval_u0

# stream family tag; the bank uses 0
REFERENCE_STREAM = 1
# samples advanced together; fixed so results do not depend on memory size
REFERENCE_BLOCK = 2048


@dataclass
class ReferenceRun:
    times: np.ndarray
    estimate: Estimate  # arrays over coarse nodes
    fine_dt: float
    n_samples: int
    seed: int
    wall_clock: float

    @property
    def u_T(self) -> float:
        return float(self.estimate.mean[-1])

    @property
    def u_T_stderr(self) -> float:
        return float(self.estimate.stderr[-1])


def _check_stability(model: ModelSpec, fine_dt: float) -> None:
    bad = np.nonzero(model.spectrum * fine_dt >= 2.0)[0]
    if bad.size:
        k = int(bad[0])
        raise ConfigError(f"Euler step unstable for a_{k + 1}={model.spectrum[k]:g}: "
                          f"a_k*fine_dt={model.spectrum[k] * fine_dt:g} >= 2")


def euler_maruyama_X(model: ModelSpec, x, grid: GridSpec, seed: int, n_samples: int,
                     block_index: int = 0) -> np.ndarray:
    """Simulate one block of the nonlinear SDE, returning ``X`` at coarse nodes.

    ``X_{m+1} = X_m + (A X_m + B(X_m)) dt + sigma sqrt(dt) xi``.  Output has
    shape ``(n_samples, n_coarse + 1, d)``; the block's noise comes from the
    stream ``(seed, block_index)`` of the reference family.
    """
    _check_stability(model, grid.fine_dt)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.d,):
        raise ConfigError(f"x has shape {x.shape}, expected ({model.d},)")
    rng = sample_rng(seed, REFERENCE_STREAM, block_index)
    dt = grid.fine_dt
    keep = 1.0 - model.spectrum * dt
    noise_scale = model.sigma * np.sqrt(dt)
    out = np.empty((n_samples, grid.n_coarse + 1, model.d))
    X = np.broadcast_to(x, (n_samples, model.d)).copy()
    out[:, 0] = X
    stride = grid.steps_per_node
    for node in range(1, grid.n_coarse + 1):
        for step in range(stride):
            drift = eval_B(model.nonlinearity, X)
            X *= keep
            drift *= dt
            X += drift
            X += noise_scale * rng.standard_normal((n_samples, model.d))
        if not np.all(np.isfinite(X)):
            raise NumericError(f"non-finite state at fine step {node * stride}")
        out[:, node] = X
    return out


def mc_reference(model: ModelSpec, grid: GridSpec, n_samples: int, seed: int) -> ReferenceRun:
    """``u_ref(t_j, x) = mean_i u0(X^{x,i}(t_j))`` along one path per sample."""
    if int(n_samples) != n_samples or n_samples < 1:
        raise ConfigError(f"n_samples must be a positive integer, got {n_samples}")
    if not np.isclose(grid.horizon, model.horizon_T, rtol=1e-12, atol=0):
        raise ConfigError(f"grid covers [0, {grid.horizon}] but horizon_T={model.horizon_T}")
    t0 = time.perf_counter()
    vals = np.empty((n_samples, grid.n_coarse + 1))
    for b, start in enumerate(range(0, n_samples, REFERENCE_BLOCK)):
        stop = min(start + REFERENCE_BLOCK, n_samples)
        X = euler_maruyama_X(model, model.x0, grid, seed, stop - start, block_index=b)
        vals[start:stop] = eval_u0(model.initial_datum, X)
    est = Estimate.from_samples(vals)
    mean, stderr = est.mean, est.stderr
    mean[0] = eval_u0(model.initial_datum, model.x0)
    stderr[0] = 0.0
    return ReferenceRun(times=grid.times(), estimate=Estimate(mean, stderr, n_samples),
                        fine_dt=grid.fine_dt, n_samples=int(n_samples), seed=int(seed),
                        wall_clock=time.perf_counter() - t0)


def closed_form_constant_drift(model: ModelSpec, t: float, x=None) -> float:
    """Exact ``u(t, x)`` for ``B = b`` constant and ``u0 = cos(<h, .>)``.

    ``X_t`` is Gaussian with mean ``exp(-a t) x + b (1 - exp(-a t)) / a`` and
    covariance ``sigma**2 diag((1 - exp(-2 a t)) / (2 a))``.
    """
    nl, u0 = model.nonlinearity, model.initial_datum
    if nl.kind not in ("constant", "zero") or u0.kind != "trig":
        raise ConfigError("closed form needs a constant (or zero) drift and a trig datum")
    x = model.x0 if x is None else np.asarray(x, dtype=np.float64)
    a = model.spectrum
    b = nl.b if nl.kind == "constant" else np.zeros(model.d)
    mean = np.exp(-a * t) * x - b * np.expm1(-a * t) / a
    var = unit_variance(t, a)
    return float(np.cos(u0.h @ mean) * np.exp(-0.5 * model.sigma ** 2 * np.sum(u0.h ** 2 * var)))
