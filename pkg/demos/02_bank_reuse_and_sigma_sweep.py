"""One bank of Ornstein-Uhlenbeck paths serves many solves.

The bank holds sigma-free paths Z, so a sweep over sigma (or over the
starting point x, or the drift) reuses it and only pays for the iterations.
The direct Euler-Maruyama reference pays for a full simulation per point.
"""

import os
import tempfile
import time

import numpy as np

from kolgauss import (GridSpec, InitialDatum, ModelSpec, Nonlinearity, load_bank, mc_reference,
                      save_bank, simulate_bank, solve_series)

N_SAMPLES = 2000
d = 10
grid = GridSpec.from_horizon(1.0, fine_dt=1e-4, coarse_dt=1e-2)
model = ModelSpec(d=d, sigma=1.0, horizon_T=1.0, nonlinearity=Nonlinearity.sine(),
                  initial_datum=InitialDatum.threshold(1.0), x0=np.ones(d))

tick = time.perf_counter()
bank = simulate_bank(model, grid, N_SAMPLES, seed=1)
print(f"bank: {bank.n_samples} paths x {bank.n_coarse + 1} nodes x d={bank.d} "
      f"in {time.perf_counter() - tick:.1f}s")

with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "sine.kgb")
    save_bank(bank, path)
    again = load_bank(path)
    print(f"saved {os.path.getsize(path) / 2**20:.1f} MiB, reload identical: "
          f"{again.checksum() == bank.checksum()}")

print("\n sigma  u(1,x) iter   n   iter[s]   u(1,x) ref   ref[s]")
for sigma in (1.0, 0.8, 0.6, 0.5, 0.4):
    m = model.replace(sigma=sigma)
    tick = time.perf_counter()
    res = solve_series(bank, m, grid)
    t_it = time.perf_counter() - tick
    ref = mc_reference(m, grid, N_SAMPLES, seed=2)
    print(f" {sigma:4.1f}   {res.u_T:.4f}+-{res.u_T_stderr:.4f} {res.n_final:3d}   {t_it:6.2f}"
          f"    {ref.u_T:.4f}+-{ref.u_T_stderr:.4f}  {ref.wall_clock:6.2f}")
