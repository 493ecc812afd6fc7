"""
Randomized inequality sweeps
============================

The existence argument rests on three inequalities: the Gagliardo-Nirenberg
bound for |u|_q, the coercivity estimate built from it, and the fact that
replacing (u, v, w) by (|u|, |v|, |w|) does not raise the energy. Each is
checked here on a corpus of random band-limited fields. A violation of the
first two would mean the shipped constant table is not valid.
"""

from triwave.analysis import inequality_sweep
from triwave.gnconst import GNConstantTable, load_gn_table
from triwave.grid import FD_DIRICHLET, GridSpec, build_grid
from triwave.model import ModelParams, sample_potential

prm = ModelParams(mu=1.0, beta=1.0, p=2.5)
spectral = build_grid(GridSpec(dimension=3, half_width=8.0, points=24))
fd = build_grid(GridSpec(dimension=3, half_width=8.0, points=24, discretization=FD_DIRICHLET))
offsets = (0.0, -1.0, -2.0)

for name, grid in (("gn", spectral), ("coercivity", spectral), ("symmetrize", fd),
                   ("energy_decomposition", spectral)):
    pot = sample_potential("shifted_harmonic", grid, offsets=offsets)
    rep = inequality_sweep(name, 200, 0, grid, prm, pot)
    print(f"{name:>20}: violations={rep.violations} worst margin={rep.worst_margin:.3e}")
    if name == "gn":
        for q, ratio in rep.details["max_quotient_over_constant"].items():
            print(f"{'':>22}q={q}: largest quotient / C_q = {ratio:.3f}")
    if name == "coercivity":
        print(f"{'':>22}energy range [{rep.details['min_energy']:.4g}, "
              f"{rep.details['max_energy']:.4g}]")

# Shrinking a constant by 5x is caught immediately.
table = load_gn_table()
bad = GNConstantTable(constants={k: v / 5 for k, v in table.constants.items()},
                      metadata=table.metadata)
rep = inequality_sweep("gn", 50, 0, spectral, prm, table=bad)
print(f"{'gn, shrunk table':>20}: violations={rep.violations} of {3 * rep.trials} checks")
