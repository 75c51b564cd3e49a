"""Gaussian iteration series for the Kolmogorov equation.

Per sample the iterated integrals obey

    I^0 = 1,   I^{n+1}(t_j) = dt * sum_{i<j} g(t_i, t_j) I^n(t_i),

with the left-endpoint rule, so the integrable singularity at ``s = t`` is
never sampled.  The series terms are ``v^n(t) = E[u0(Z^x_t) I^n(t)]``.

On the uniform coarse grid ``g(t_i, t_j)`` depends on ``i`` only through
``B(Z^x_{t_i})``, ``Z_{t_i}`` and the lag ``j - i``; splitting

    g(i, j) = sum_k w_k(j-i) B_ik Z_jk - sum_k w_k(j-i) c_k(j-i) B_ik Z_ik

turns each recursion step into two causal convolutions per component,
evaluated as batched products with lower-triangular Toeplitz matrices.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .bank import GaussianBank, heat_flow, lift_path
from .errors import ConfigError, DomainError, NumericError
from .gaussian_core import GridSpec, ModelSpec
from .model_zoo import eval_B, eval_u0

Metric = Literal["sup_t", "endpoint"]
# bytes per working array in the blocked recursion
_BLOCK_BYTES = 32 * 2 ** 20


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error.

    ``mean`` and ``stderr`` are floats or arrays over coarse nodes.
    """

    mean: float | np.ndarray
    stderr: float | np.ndarray
    n_samples: int

    @classmethod
    def from_samples(cls, values) -> "Estimate":
        values = np.asarray(values, dtype=np.float64)
        n = values.shape[0]
        if n == 0:
            raise ConfigError("cannot estimate from an empty sample")
        mean = values.mean(axis=0)
        if n > 1:
            stderr = values.std(axis=0, ddof=1) / np.sqrt(n)
        else:
            stderr = np.full_like(mean, np.nan)
        if np.ndim(mean) == 0:
            return cls(float(mean), float(stderr), n)
        return cls(mean, stderr, n)

    def at(self, j: int) -> "Estimate":
        return Estimate(float(self.mean[j]), float(self.stderr[j]), self.n_samples)


@dataclass
class IterationState:
    n: int
    values: np.ndarray  # I^n, shape (n_samples, n_coarse + 1)

    @classmethod
    def initial(cls, bank: GaussianBank) -> "IterationState":
        return cls(0, np.ones((bank.n_samples, bank.n_coarse + 1)))


@dataclass
class SeriesResult:
    times: np.ndarray
    terms: list[Estimate]          # v^n at every node, n = 0..n_final
    partial_sums: list[np.ndarray]  # u^n at every node
    u_stderr: np.ndarray           # stderr of u^{n_final} from per-sample partial sums
    err_history: list[float]       # err(n) for n = 0..n_final
    converged: bool
    n_final: int
    metric: str
    tol: float
    u_T_samples: np.ndarray | None = None  # per-sample partial sums at T
    timings: dict = field(default_factory=dict)

    @property
    def u(self) -> np.ndarray:
        return self.partial_sums[-1]

    @property
    def u_T(self) -> float:
        return float(self.partial_sums[-1][-1])

    @property
    def u_T_stderr(self) -> float:
        return float(self.u_stderr[-1])


def lag_kernels(spectrum, sigma: float, coarse_dt: float, n_coarse: int):
    """Toeplitz kernels ``W[k, j, i] = w_k(j-i)`` and ``W*c`` (zero for ``j <= i``).

    ``w_k(m) = 2 a_k c / (sigma (1 - c**2))`` with ``c = exp(-m dt a_k)`` is the
    diagonal of ``sigma Q_tau^{-1} exp(tau A)`` at lag ``tau = m dt``, acting on
    sigma-free increments.
    """
    a = np.asarray(spectrum, dtype=np.float64)[:, None]
    lag = np.arange(1, n_coarse + 1, dtype=np.float64)[None, :] * coarse_dt
    c = np.exp(-lag * a)
    w = 2.0 * a * c / (sigma * -np.expm1(-2.0 * lag * a))
    j, i = np.indices((n_coarse + 1, n_coarse + 1))
    m = j - i
    lower = m > 0
    W = np.zeros((a.shape[0], n_coarse + 1, n_coarse + 1))
    Wc = np.zeros_like(W)
    W[:, lower] = w[:, m[lower] - 1]
    Wc[:, lower] = (w * c)[:, m[lower] - 1]
    return W, Wc


class Workspace:
    """Per-(bank, model) caches shared by every iteration.

    Holds ``B(Z^x)`` in component-major layout ``(d, n_samples, n_nodes)``,
    the values ``u0(Z^x)`` per sample and node, and the lag kernels.
    """

    def __init__(self, bank: GaussianBank, model: ModelSpec):
        bank.check_compatible(model)
        if bank.n_samples < 1:
            raise ConfigError("empty bank")
        self.bank = bank
        self.model = model
        self.dt = bank.coarse_dt
        n_nodes = bank.n_coarse + 1
        self.block = max(1, _BLOCK_BYTES // (8 * n_nodes * bank.d))
        flow = heat_flow(bank, model.x0)
        self.u0_vals = np.empty((bank.n_samples, n_nodes))
        self.B_t = np.empty((bank.d, bank.n_samples, n_nodes))
        for blk in self._blocks():
            zx = flow + model.sigma * np.asarray(bank.paths[blk])
            self.u0_vals[blk] = eval_u0(model.initial_datum, zx)
            self.B_t[:, blk, :] = eval_B(model.nonlinearity, zx).transpose(2, 0, 1)
        # Z^x(0) = x exactly
        self.u0_vals[:, 0] = eval_u0(model.initial_datum, model.x0)
        W, Wc = lag_kernels(bank.spectrum, model.sigma, bank.coarse_dt, bank.n_coarse)
        self.W_T = np.ascontiguousarray(W.transpose(0, 2, 1))
        self.Wc_T = np.ascontiguousarray(Wc.transpose(0, 2, 1))

    def _blocks(self):
        n = self.bank.n_samples
        for start in range(0, n, self.block):
            yield slice(start, min(start + self.block, n))

    def advance(self, values: np.ndarray) -> np.ndarray:
        out = np.empty_like(values)
        for blk in self._blocks():
            z = np.asarray(self.bank.paths[blk]).transpose(2, 0, 1)
            p = values[blk][None, :, :] * self.B_t[:, blk, :]
            conv = np.matmul(p, self.W_T)
            conv_c = np.matmul(p * z, self.Wc_T)
            out[blk] = self.dt * ((z * conv).sum(axis=0) - conv_c.sum(axis=0))
        out[:, 0] = 0.0
        return out

    def estimate(self, values: np.ndarray, nodes=None) -> Estimate:
        prod = self.u0_vals * values
        if nodes is not None:
            prod = prod[:, nodes]
        return Estimate.from_samples(prod)


def _check_nodes(bank: GaussianBank, nodes):
    if nodes is None:
        return None
    idx = np.asarray(nodes)
    if np.any(idx < 0) or np.any(idx > bank.n_coarse):
        raise DomainError(f"node indices must lie in [0, {bank.n_coarse}]")
    return idx


def v0_estimate(bank: GaussianBank, model: ModelSpec, at_nodes=None,
                workspace: Workspace | None = None) -> Estimate:
    """``v^0(t_j, x) = E u0(Z^x_{t_j})`` at every node (or at ``at_nodes``).

    Node 0 is exact: ``u0(x)`` with zero standard error.
    """
    ws = workspace or Workspace(bank, model)
    est = ws.estimate(np.ones((bank.n_samples, bank.n_coarse + 1)))
    mean, stderr = est.mean.copy(), est.stderr.copy()
    mean[0] = eval_u0(model.initial_datum, model.x0)
    stderr[0] = 0.0
    idx = _check_nodes(bank, at_nodes)
    if idx is not None:
        mean, stderr = mean[idx], stderr[idx]
    return Estimate(mean, stderr, est.n_samples)


def kernel_g(bank: GaussianBank, sample: int, i: int, j: int, model: ModelSpec) -> float:
    """Single-sample integrand ``g(t_i, t_j)`` in its diagonal closed form."""
    if not i < j:
        raise DomainError(f"kernel needs i < j (lag 0 is singular), got i={i}, j={j}")
    tau = (j - i) * bank.coarse_dt
    a = bank.spectrum
    zs = lift_path(bank, sample, model.x0, model.sigma, i)
    zt = lift_path(bank, sample, model.x0, model.sigma, j)
    decay = np.exp(-tau * a)
    weight = 2.0 * a * decay / (model.sigma ** 2 * -np.expm1(-2.0 * tau * a))
    return float(np.sum(weight * eval_B(model.nonlinearity, zs) * (zt - decay * zs)))


def advance_iteration(state: IterationState, bank: GaussianBank, model: ModelSpec,
                      workspace: Workspace | None = None) -> IterationState:
    ws = workspace or Workspace(bank, model)
    if state.values.shape != (bank.n_samples, bank.n_coarse + 1):
        raise ConfigError(f"state has shape {state.values.shape}, expected "
                          f"{(bank.n_samples, bank.n_coarse + 1)}")
    return IterationState(state.n + 1, ws.advance(state.values))


def vn_estimate(state: IterationState, bank: GaussianBank, model: ModelSpec,
                at: Literal["endpoint_T", "all_nodes"] = "all_nodes",
                workspace: Workspace | None = None) -> Estimate:
    if state.n == 0:
        est = v0_estimate(bank, model, workspace=workspace)
    else:
        est = (workspace or Workspace(bank, model)).estimate(state.values)
    if at == "endpoint_T":
        return est.at(-1)
    if at != "all_nodes":
        raise ConfigError(f"unknown evaluation target {at!r}")
    return est


def _err(est: Estimate, metric: str) -> float:
    if metric == "sup_t":
        return float(np.max(np.abs(est.mean)))
    return float(abs(est.mean[-1]))


def solve_series(bank: GaussianBank, model: ModelSpec, grid: GridSpec | None = None,
                 tol: float = 1e-3, max_iters: int = 100, metric: Metric = "sup_t",
                 workspace: Workspace | None = None) -> SeriesResult:
    """Sum ``v^0 + v^1 + ...`` until ``err(n) < tol`` or ``max_iters`` terms.

    ``metric="sup_t"`` uses ``max_j |v^n(t_j)|``; ``"endpoint"`` uses
    ``|v^n(T)|``.  Non-convergence is reported through ``converged=False``;
    a non-finite term raises :class:`NumericError`.
    """
    if not tol > 0:
        raise ConfigError("tol must be > 0")
    if max_iters < 1:
        raise ConfigError("max_iters must be >= 1")
    if metric not in ("sup_t", "endpoint"):
        raise ConfigError(f"unknown stopping metric {metric!r}")
    bank.check_compatible(model, grid)

    t0 = time.perf_counter()
    ws = workspace or Workspace(bank, model)
    timings = {"setup": time.perf_counter() - t0, "iterations": []}

    state = IterationState.initial(bank)
    v = v0_estimate(bank, model, workspace=ws)
    terms, sums, errs = [v], [v.mean.copy()], [_err(v, metric)]
    per_sample = ws.u0_vals.copy()
    converged = False
    while state.n < max_iters:
        tick = time.perf_counter()
        state = advance_iteration(state, bank, model, workspace=ws)
        if not np.all(np.isfinite(state.values)):
            raise NumericError(f"non-finite iterated integral at iteration {state.n}")
        v = ws.estimate(state.values)
        per_sample += ws.u0_vals * state.values
        terms.append(v)
        sums.append(sums[-1] + v.mean)
        errs.append(_err(v, metric))
        timings["iterations"].append(time.perf_counter() - tick)
        if errs[-1] < tol:
            converged = True
            break
    u_stderr = per_sample.std(axis=0, ddof=1) / np.sqrt(bank.n_samples) \
        if bank.n_samples > 1 else np.full(bank.n_coarse + 1, np.nan)
    u_stderr[0] = 0.0
    timings["total"] = time.perf_counter() - t0
    return SeriesResult(times=bank.times(), terms=terms, partial_sums=sums, u_stderr=u_stderr,
                        err_history=errs, converged=converged, n_final=state.n,
                        metric=metric, tol=tol, u_T_samples=per_sample[:, -1].copy(),
                        timings=timings)
