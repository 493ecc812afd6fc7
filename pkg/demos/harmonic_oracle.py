"""
Harmonic oracle
===============

With mu = beta = 0 the energy decouples into three copies of the quantum
harmonic oscillator -Lap + |x|^2. Its ground state is exp(-|x|^2/2) with
eigenvalue N, so the constrained minimum is (N/2)(a+b+c) and every multiplier
equals -N. This script starts the flow from random positive data and checks
both numbers.
"""

import time

import numpy as np

from triwave.analysis import oracle_harmonic
from triwave.grid import GridSpec, build_grid
from triwave.model import ModelParams, sample_potential
from triwave.solver import SolverOptions, minimize

opts = SolverOptions(scheme="preconditioned", init="random", seed=1)

for N, n in ((1, 256), (2, 64), (3, 32)):
    grid = build_grid(GridSpec(dimension=N, half_width=8.0, points=n))
    prm = ModelParams(mu=0.0, beta=0.0, p=2.5, masses=(2.0, 1.0, 0.5), dimension=N)
    case = oracle_harmonic(prm, grid)

    t0 = time.perf_counter()
    res = minimize(None, sample_potential("harmonic", grid), prm, opts)
    secs = time.perf_counter() - t0

    err = abs(res.energy - case.expected_energy)
    lam = res.multipliers.as_array()
    print(f"N={N} n={n}: {res.iterations} iterations in {secs:.2f}s")
    print(f"  energy {res.energy:.15f} expected {case.expected_energy} error {err:.1e}")
    print(f"  multipliers {np.array2string(lam, precision=12)} expected {-N}")

# The converged profile is the Gaussian, up to roundoff.
grid = build_grid(GridSpec(dimension=1, half_width=8.0, points=256))
prm = ModelParams(mu=0.0, beta=0.0, p=3.0, dimension=1)
res = minimize(None, sample_potential("harmonic", grid), prm, opts)
gauss = grid.gaussian() / np.sqrt(float(grid.integrate(grid.gaussian() ** 2)))
print("max |u - gaussian| in 1D:", float(np.abs(res.minimizer.data[0] - gauss).max()))
