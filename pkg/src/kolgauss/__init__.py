"""Gaussian iteration series for high-dimensional Kolmogorov equations.

Solves ``du/dt = (sigma^2/2) Lap u + <Ax + B(x), Du>`` for diagonal
``A = -diag(a_k)`` by summing Gaussian expectations over a reusable bank of
linear Ornstein-Uhlenbeck paths, with a direct Euler-Maruyama Monte Carlo
solver and closed-form oracles for comparison.
"""

from .bank import GaussianBank, lift_path, lift_paths, load_bank, save_bank, simulate_bank
from .diagnostics import (check_beta_identity, derivative_formula_check, gamma_bound,
                          trig_directional_derivative)
from .errors import BankFormatError, ConfigError, DomainError, KolgaussError, NumericError
from .gaussian_core import (BoundParams, GridSpec, ModelSpec, diagonal_bound_params,
                            lambda_diag, qt_diag, qt_inv_sqrt_diag, semigroup_diag, xi_diag)
from .iteration import (Estimate, IterationState, SeriesResult, Workspace, advance_iteration,
                        kernel_g, solve_series, v0_estimate, vn_estimate)
from .model_zoo import InitialDatum, Nonlinearity, eval_B, eval_u0, sup_norm_B
from .reference import ReferenceRun, closed_form_constant_drift, euler_maruyama_X, mc_reference

__version__ = "0.1.0"
