"""Self-checks run by ``kolgauss validate``: identities, oracles, brute force."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .bank import lift_path, simulate_bank
from .diagnostics import check_beta_identity
from .gaussian_core import (GridSpec, ModelSpec, lambda_diag, qt_inv_sqrt_diag,
                            semigroup_diag, xi_diag)
from .iteration import IterationState, Workspace, solve_series
from .model_zoo import InitialDatum, Nonlinearity, eval_B
from .reference import closed_form_constant_drift


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def brute_force_iterate(bank, model, n: int) -> np.ndarray:
    """``I^n`` at every node by explicit enumeration of ordered time chains.

    Builds each kernel value from the diagonal building blocks
    ``Q^{-1/2}`` and ``Lambda`` on lifted paths, independently of the
    convolution used by the solver.  Cost is combinatorial; tiny banks only.
    """
    n_nodes = bank.n_coarse + 1
    dt = bank.coarse_dt
    out = np.zeros((bank.n_samples, n_nodes))
    ks = range(1, model.d + 1)
    for s in range(bank.n_samples):
        z = [lift_path(bank, s, model.x0, model.sigma, j) for j in range(n_nodes)]
        drift = [eval_B(model.nonlinearity, zj) for zj in z]

        def g(i, j):
            tau = (j - i) * dt
            total = 0.0
            for k in ks:
                w = qt_inv_sqrt_diag(tau, k, model) * lambda_diag(tau, k, model)
                c = semigroup_diag(tau, k, model)
                total += w * drift[i][k - 1] * (z[j][k - 1] - c * z[i][k - 1])
            return total

        for j in range(n_nodes):
            if n == 0:
                out[s, j] = 1.0
                continue
            acc = 0.0
            for chain in itertools.combinations(range(j), n):
                term = dt ** n
                for a, b in zip(chain, chain[1:] + (j,)):
                    term *= g(a, b)
                acc += term
            out[s, j] = acc
    return out


def _tiny_model(d=3, nonlinearity=None):
    return ModelSpec(d=d, sigma=1.0, horizon_T=0.05,
                     nonlinearity=nonlinearity or Nonlinearity.sine(),
                     initial_datum=InitialDatum.threshold(1.0), x0=np.ones(d))


def check_beta_grid() -> CheckResult:
    worst = 0.0
    for n, delta, t in itertools.product((1, 2, 3), (0.3, 0.5, 0.7), (0.5, 1.0)):
        num, closed = check_beta_identity(n, delta, t)
        worst = max(worst, abs(num - closed) / abs(closed))
    return CheckResult("beta-gamma identity", worst <= 1e-3, f"max rel err {worst:.2e}")


def check_xi_identity(n_points: int = 200, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        d = int(rng.integers(1, 6))
        model = _tiny_model(d).replace(sigma=float(rng.uniform(0.2, 2.0)))
        t = float(rng.uniform(1e-3, 2.0))
        k = int(rng.integers(1, d + 1))
        lhs = xi_diag(t, k, model)
        rhs = model.sigma * qt_inv_sqrt_diag(t, k, model) * lambda_diag(t, k, model)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return CheckResult("kernel weight factorisation", worst <= 1e-12, f"max rel err {worst:.2e}")


def check_brute_force(max_n: int = 4) -> CheckResult:
    model = _tiny_model()
    grid = GridSpec(fine_dt=1e-3, coarse_dt=1e-2, n_coarse=5)
    bank = simulate_bank(model, grid, 3, seed=7, mode="exact")
    ws = Workspace(bank, model)
    state = IterationState.initial(bank)
    worst = 0.0
    for n in range(1, max_n + 1):
        state = IterationState(n, ws.advance(state.values))
        oracle = brute_force_iterate(bank, model, n)
        scale = np.maximum(np.abs(oracle), 1e-300)
        mask = oracle != 0
        if np.any(state.values[~mask] != 0):
            return CheckResult("brute-force recursion", False, f"nonzero where oracle is 0 (n={n})")
        worst = max(worst, float(np.max(np.abs(state.values - oracle)[mask] / scale[mask],
                                        initial=0.0)))
    return CheckResult("brute-force recursion", worst <= 1e-12, f"max rel err {worst:.2e}")


def check_moving_average() -> CheckResult:
    from .harness import moving_average
    got = moving_average([0, 0, 3, 0, 0], window=3)
    ok = np.allclose(got, [0, 1, 1, 1, 0], rtol=0, atol=1e-15)
    return CheckResult("moving average", bool(ok), f"{np.round(got, 12).tolist()}")


def check_zero_drift() -> CheckResult:
    model = _tiny_model(nonlinearity=Nonlinearity.zero())
    grid = GridSpec(fine_dt=1e-3, coarse_dt=1e-2, n_coarse=5)
    bank = simulate_bank(model, grid, 50, seed=1, mode="exact")
    res = solve_series(bank, model, grid, tol=1e-3, max_iters=3)
    zero = all(np.all(v.mean == 0.0) for v in res.terms[1:])
    same = np.array_equal(res.u, res.terms[0].mean)
    return CheckResult("zero drift series", bool(zero and same),
                       f"n_final={res.n_final}, higher terms zero={zero}")


def check_constant_drift_oracle(n_samples: int = 2000) -> CheckResult:
    d = 5
    model = ModelSpec(d=d, sigma=1.0, horizon_T=1.0,
                      nonlinearity=Nonlinearity.constant(0.1 * np.ones(d)),
                      initial_datum=InitialDatum.trig(np.ones(d)), x0=np.ones(d))
    grid = GridSpec.from_horizon(1.0, fine_dt=1e-3, coarse_dt=1e-2)
    bank = simulate_bank(model, grid, n_samples, seed=11, mode="exact")
    res = solve_series(bank, model, grid)
    exact = closed_form_constant_drift(model, 1.0)
    gap = abs(res.u_T - exact)
    tol = max(3 * res.u_T_stderr, 0.02)
    return CheckResult("constant drift oracle", bool(res.converged and gap <= tol),
                       f"|u - exact| = {gap:.3e} (tol {tol:.3e})")


CHECKS = (check_beta_grid, check_xi_identity, check_brute_force, check_moving_average,
          check_zero_drift, check_constant_drift_oracle)


def run_validation() -> list[CheckResult]:
    return [check() for check in CHECKS]
