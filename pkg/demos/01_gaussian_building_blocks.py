"""The diagonal Gaussian objects behind the iteration, and the a-priori bound.

For A = -diag(k^2) and identity noise the covariance Q_t, the smoothing
operator Lambda(t) = Q_t^{-1/2} e^{tA} and the kernel weight all have closed
forms.  Lambda blows up like 1/(sigma sqrt t) near t = 0; that integrable
singularity is what makes every term of the series finite, and it is what the
Gamma-function bound on the terms quantifies.
"""

import numpy as np

from kolgauss import (GridSpec, InitialDatum, ModelSpec, Nonlinearity, check_beta_identity,
                      diagonal_bound_params, gamma_bound, lambda_diag, qt_diag, sup_norm_B)
from kolgauss.gaussian_core import lambda_norm

d = 10
model = ModelSpec(d=d, sigma=1.0, horizon_T=1.0, nonlinearity=Nonlinearity.sine(),
                  initial_datum=InitialDatum.threshold(1.0), x0=np.ones(d))

print("Covariance and smoothing factors at t = 1")
for k in (1, 2, 5, 10):
    print(f"  k={k:2d}  Q_kk={qt_diag(1.0, k, model):.6f}  Lambda_kk={lambda_diag(1.0, k, model):.3e}")

print("\nBlow-up of ||Lambda(t)|| against 1/(sigma sqrt t)")
for t in (1e-1, 1e-2, 1e-3, 1e-4, 1e-6):
    print(f"  t={t:.0e}  ratio={lambda_norm(t, model) * np.sqrt(t) * model.sigma:.5f}")

print("\nNested singular integrals against their Gamma closed form")
for n in (1, 2, 3):
    num, closed = check_beta_identity(n, 0.5, 1.0)
    print(f"  n={n}  quadrature={num:.8f}  closed={closed:.8f}")

# the bound peaks, then decays faster than any geometric sequence
bp = diagonal_bound_params(model, u0_sup=1.0, b_sup=sup_norm_B(model.nonlinearity, d))
print("\nA-priori bound on |v^n(1, x)| for the sine drift (||B|| = sqrt(10))")
for n in (0, 1, 5, 10, 20, 40, 80, 160, 320):
    print(f"  n={n:3d}  bound={gamma_bound(n, 1.0, bp):.3e}")
print("The bound is loose: measured terms fall below 1e-3 after a handful of iterations.")
