"""A-priori bounds and numerical identity checks."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, roots_jacobi

from .bank import sample_rng
from .errors import DomainError
from .gaussian_core import BoundParams, ModelSpec, unit_variance
from .iteration import Estimate
from .model_zoo import InitialDatum, eval_u0

# stream family tag for the derivative check (bank: 0, reference: 1)
DERIVATIVE_STREAM = 2


def gamma_bound(n: int, t: float, bp: BoundParams) -> float:
    """``||u0|| (||B|| C)^n t^{n(1-delta)} Gamma(1-delta)^n / Gamma(1 + n(1-delta))``.

    Evaluated in log space so large ``n`` neither overflows nor underflows
    prematurely.
    """
    if not 0.0 < bp.delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {bp.delta}")
    if n < 0 or int(n) != n:
        raise DomainError(f"n must be a non-negative integer, got {n}")
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    if n == 0:
        return float(bp.u0_sup)
    if bp.u0_sup == 0 or bp.b_sup == 0:
        return 0.0
    alpha = 1.0 - bp.delta
    log_val = (math.log(bp.u0_sup) + n * math.log(bp.b_sup * bp.c_delta)
               + n * alpha * math.log(t) + n * gammaln(alpha) - gammaln(1.0 + n * alpha))
    # past the float range the bound is vacuous rather than an error
    return math.exp(log_val) if log_val < 709.0 else math.inf


def beta_identity_closed_form(n: int, delta: float, t: float) -> float:
    alpha = 1.0 - delta
    return math.exp(n * gammaln(alpha) - gammaln(1.0 + n * alpha) + n * alpha * math.log(t))


def nested_singular_integral(n: int, delta: float, t: float, n_nodes: int = 64) -> float:
    """Numerically integrate ``prod_i (r_{i+1} - r_i)^-delta`` over the simplex.

    Each level is ``F_m(r) = int_0^r (r - s)^-delta F_{m-1}(s) ds`` with
    ``F_0 = 1``; the weight is absorbed by Gauss-Jacobi nodes clustered at the
    upper endpoint, so the integrand seen by the rule is smooth there.
    """
    x, w = roots_jacobi(n_nodes, -delta, 0.0)

    def level(m: int, r: np.ndarray) -> np.ndarray:
        if m == 0:
            return np.ones_like(r)
        inner = r[..., None] * (1.0 + x) / 2.0
        return (r / 2.0) ** (1.0 - delta) * (level(m - 1, inner) @ w)

    return float(level(n, np.asarray(t, dtype=np.float64)))


def check_beta_identity(n: int, delta: float, t: float, n_nodes: int = 64) -> tuple[float, float]:
    """Return ``(numeric, closed_form)`` for the nested-integral Gamma identity."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if not 1 <= n <= 3:
        raise DomainError(f"nested quadrature supports 1 <= n <= 3, got {n}")
    return nested_singular_integral(n, delta, t, n_nodes), beta_identity_closed_form(n, delta, t)


def trig_directional_derivative(model: ModelSpec, h0, t: float, h) -> float:
    """Exact ``<h, D S_t f(x)>`` for ``f = cos(<h0, .>)``."""
    h0, h = np.asarray(h0, float), np.asarray(h, float)
    decay = np.exp(-model.spectrum * t)
    phase = h0 @ (decay * model.x0)
    damp = math.exp(-0.5 * model.sigma ** 2 * float(np.sum(h0 ** 2 * unit_variance(t, model.spectrum))))
    return float(-math.sin(phase) * (h0 @ (decay * h)) * damp)


def derivative_formula_check(model: ModelSpec, f: InitialDatum, t: float, h, n_samples: int,
                             seed: int = 0, fd_step: float = 1e-3) -> tuple[Estimate, Estimate]:
    """Compare the Gaussian derivative formula with a finite difference of ``S_t f``.

    Returns ``(mc, fd)``: the Monte Carlo estimate of
    ``E[f(Z^x_t) <Lambda(t) h, Q_t^{-1/2}(Z^x_t - e^{tA} x)>]`` and the central
    difference of the sample mean of ``f(Z^{x +- eps h}_t)`` on common noise.
    """
    if not t > 0:
        raise DomainError(f"t must be > 0, got {t}")
    h = np.asarray(h, dtype=np.float64)
    a = model.spectrum
    xi = sample_rng(seed, DERIVATIVE_STREAM, 0).standard_normal((n_samples, model.d))
    noise = model.sigma * np.sqrt(unit_variance(t, a)) * xi
    decay = np.exp(-a * t)
    # Lambda(t) h and Q_t^{-1/2}(sigma sqrt(q) xi) = xi, diagonally
    lam_h = np.sqrt(2.0 * a) * decay / (model.sigma * np.sqrt(-np.expm1(-2.0 * t * a))) * h
    mc = eval_u0(f, decay * model.x0 + noise) * (xi @ lam_h)
    up = eval_u0(f, decay * (model.x0 + fd_step * h) + noise)
    down = eval_u0(f, decay * (model.x0 - fd_step * h) + noise)
    fd = (up - down) / (2.0 * fd_step)
    return Estimate.from_samples(mc), Estimate.from_samples(fd)
