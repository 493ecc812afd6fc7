"""
Analytic oracles and randomized inequality sweeps.

The harmonic oracle uses the closed form of -Lap + |x|^2: ground state
exp(-|x|^2/2) with eigenvalue N, so with mu = beta = 0 the minimum energy is
(N/2)(a+b+c) and every multiplier equals -N.

``scalar_ground_state`` is an independent check for the decoupled case
beta = 0: it solves each scalar problem by self-consistent diagonalization of
the dense discrete Hamiltonian, sharing no code with the gradient flow except
the grid's Laplacian.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .exceptions import ComparisonError, ConfigurationError
from .grid import Grid, TriField
from .model import (ModelParams, Multipliers, PotentialSet, coercivity_bound, energy,
                    energy_free, gn_quotient, sample_potential, symmetrize)
from .solver import SolveResult, SolverOptions, minimize, renormalize

PROVENANCES = ("analytic", "scalar_oracle", "comparison")
SWEEPS = ("gn", "coercivity", "symmetrize", "energy_decomposition")
DEFAULT_GN_Q = (2.5, 3.0, 4.0)


@dataclass(frozen=True)
class OracleCase:
    name: str
    params: ModelParams
    potential_kind: str
    expected_energy: float
    expected_multipliers: Multipliers
    tolerance: float
    provenance: str = "analytic"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ConfigurationError("oracle tolerance must be positive")
        if self.provenance not in PROVENANCES:
            raise ConfigurationError(f"unknown provenance {self.provenance!r}")


@dataclass
class InequalityReport:
    name: str
    trials: int
    violations: int
    worst_margin: float
    seed: int = 0
    grid: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.violations == 0

    def as_dict(self):
        return {"name": self.name, "trials": self.trials, "violations": self.violations,
                "worst_margin": self.worst_margin, "seed": self.seed, "grid": self.grid,
                "params": self.params, "details": self.details}

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


# ----------------------------------------------------------------------
# oracles

def oracle_tolerance(grid: Grid, prm: ModelParams) -> float:
    """Energy tolerance for the harmonic oracle on ``grid``.

    FD: twice the leading discretization error N (a+b+c) h^2 / 32 of the
    three-point stencil on the Gaussian ground state.
    Spectral: max(1e-8, 10 E (exp(-L^2) + exp(-(pi/h)^2 / 2))), covering box
    truncation and aliasing of the Gaussian.
    """
    total = sum(prm.masses)
    N = grid.dimension
    if grid.is_spectral:
        e = 0.5 * N * total
        est = 10.0 * e * (math.exp(-grid.half_width ** 2) + math.exp(-0.5 * (math.pi / grid.h) ** 2))
        return max(1e-8, est)
    return max(1e-8, N * total * grid.h ** 2 / 16.0)


def oracle_harmonic(prm: ModelParams, grid: Grid | None = None) -> OracleCase:
    """Closed-form case for mu = beta = 0 and V = |x|^2."""
    if any(m != 0 for m in prm.mu) or prm.beta != 0:
        raise ConfigurationError("oracle_harmonic needs mu_i = 0 and beta = 0 "
                                 f"(got mu={prm.mu}, beta={prm.beta})")
    N = prm.dimension
    if grid is not None and grid.dimension != N:
        raise ConfigurationError("grid and model dimensions differ")
    tol = 1e-8 if grid is None else oracle_tolerance(grid, prm)
    a, b, c = prm.masses
    return OracleCase(
        name=f"harmonic_N{N}_m{a:g}-{b:g}-{c:g}",
        params=prm,
        potential_kind="harmonic",
        expected_energy=0.5 * N * (a + b + c),
        expected_multipliers=Multipliers(-float(N), -float(N), -float(N)),
        tolerance=tol,
        provenance="analytic",
    )


def run_oracle_case(case: OracleCase, grid: Grid, opts: SolverOptions | None = None):
    """Solve an oracle case; returns (passed, SolveResult, energy error)."""
    pot = sample_potential(case.potential_kind, grid)
    res = minimize(None, pot, case.params, opts)
    err = abs(res.energy - case.expected_energy)
    return (res.converged and err <= case.tolerance), res, err


def scalar_ground_state(grid: Grid, V, mu, p, mass, tol=1e-13, max_iter=1000, mixing=0.5):
    """Positive ground state of the scalar problem on a small grid.

    Minimizes 1/2 int(|grad u|^2 + V u^2) - (mu/p) int |u|^p at mass ``mass``
    by self-consistent iteration: diagonalize H = -Lap + V - mu |u|^(p-2)
    densely, take the lowest eigenvector, mix and repeat.

    Returns
    -------
    u : ndarray, energy : float, multiplier : float
    """
    if grid.size > 4096:
        raise ConfigurationError("scalar_ground_state builds a dense Hamiltonian; "
                                 f"grid of {grid.size} nodes is too large")
    eye = np.eye(grid.size).reshape((grid.size,) + grid.shape)
    lap = grid.laplacian(eye).reshape(grid.size, grid.size).T
    lap = 0.5 * (lap + lap.T)
    Vf = np.asarray(V, dtype=float).ravel()

    def normalize(x):
        x = np.abs(x)
        return x * math.sqrt(mass / float(grid.integrate(x.reshape(grid.shape) ** 2)))

    u = normalize(grid.gaussian().ravel())
    eps = np.nan
    for _ in range(max_iter):
        H = -lap + np.diag(Vf - mu * np.abs(u) ** (p - 2.0))
        vals, vecs = sla.eigh(H, subset_by_index=[0, 0])
        phi = normalize(vecs[:, 0])
        new = normalize((1.0 - mixing) * u + mixing * phi)
        change = math.sqrt(float(grid.integrate(((new - u) ** 2).reshape(grid.shape))))
        u, eps = new, float(vals[0])
        if change < tol:
            break
    uf = u.reshape(grid.shape)
    e = (0.5 * float(grid.grad_sq_integral(uf)) + 0.5 * float(grid.integrate(V * uf * uf))
         - mu / p * float(grid.integrate(np.abs(uf) ** p)))
    return uf, e, -eps


def free_vs_trapped(result_trapped: SolveResult, pot: PotentialSet, prm: ModelParams,
                    result_free: SolveResult | None = None,
                    opts: SolverOptions | None = None) -> float:
    """m - [m_free + 1/2 int sum V_i u_i^2] at the trapped minimizer.

    Nonnegative (up to solver tolerance) whenever ``result_free`` reached the
    free minimum on the same grid. If ``result_free`` is None the V = 0
    problem is solved here with ``opts``.
    """
    t = result_trapped.minimizer
    if result_free is None:
        zero = sample_potential("zero", t.grid)
        result_free = minimize(None, zero, prm, opts)
        if not result_free.converged:
            raise ComparisonError(f"free solve did not converge: {result_free.message}")
    if t.grid != result_free.minimizer.grid or pot.grid != t.grid:
        raise ComparisonError("trapped and free results live on different grids")
    if not np.allclose(result_trapped.minimizer.masses(), result_free.minimizer.masses(),
                       rtol=1e-10):
        raise ComparisonError("trapped and free results have different masses")
    vterm = 0.5 * float(np.sum(t.grid.integrate(pot.V * t.data ** 2)))
    return result_trapped.energy - (result_free.energy + vterm)


# ----------------------------------------------------------------------
# random corpus

def random_field(grid: Grid, rng: np.random.Generator, envelope=1.0 / 3.0):
    """Band-limited noise times a Gaussian envelope.

    Fourier coefficients are standard normal on the lowest n/4 modes of each
    axis (|index| <= n/8) and zero elsewhere; the envelope
    exp(-|x|^2 / (2 (envelope L)^2)) localizes the field inside the box.
    """
    n, N = grid.n, grid.dimension
    kmax = max(1, n // 8)
    idx = np.r_[0:kmax + 1, n - kmax:n]
    coef = np.zeros(grid.shape, dtype=complex)
    block = np.ix_(*([idx] * N))
    coef[block] = rng.standard_normal((idx.size,) * N) + 1j * rng.standard_normal((idx.size,) * N)
    f = np.fft.ifftn(coef).real
    s = envelope * grid.half_width
    return f * grid.gaussian(width=s)


def random_trifield(grid: Grid, rng: np.random.Generator, masses) -> TriField:
    data = np.stack([random_field(grid, rng) for _ in range(3)])
    return renormalize(TriField(grid, data), masses)


# ----------------------------------------------------------------------
# sweeps

def _energy_scale(t, pot, prm):
    g, d = t.grid, t.data
    kin = float(np.sum(g.grad_sq_integral(d)))
    vv = float(np.sum(g.integrate(np.abs(pot.V) * d * d)))
    nl = float(np.sum(prm.mu_array * g.integrate(np.abs(d) ** prm.p))) / prm.p
    cp = prm.beta * float(g.integrate(np.abs(d[0] * d[1] * d[2])))
    return 0.5 * kin + 0.5 * vv + nl + cp


def inequality_sweep(name, trials, seed, grid: Grid, prm: ModelParams,
                     pot: PotentialSet | None = None, table=None, qs=DEFAULT_GN_Q,
                     tie_rtol=1e-13) -> InequalityReport:
    """Evaluate one inequality on ``trials`` random fields.

    Margins are signed so that a positive value is a violation:

    ``gn``                   quotient - C_q for each q in ``qs``
    ``coercivity``           bound(t) - J(t)
    ``symmetrize``           J(|t|) - J(t), ties within ``tie_rtol`` times the
                             sum of absolute energy terms are not violations
    ``energy_decomposition`` |(J - J_free) - 1/2 int sum V u^2| relative to
                             the largest of the three magnitudes, violation
                             above 1e-12
    """
    if name not in SWEEPS:
        raise ConfigurationError(f"unknown sweep {name!r}; expected one of {', '.join(SWEEPS)}")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    if pot is None:
        pot = sample_potential("harmonic", grid)
    if name in ("gn", "coercivity") and table is None:
        from .gnconst import load_gn_table
        table = load_gn_table()
    if name == "symmetrize" and grid.is_spectral:
        from .exceptions import UnsupportedDiscretizationError
        raise UnsupportedDiscretizationError("symmetrize sweep needs an fd_dirichlet grid")

    rng = np.random.default_rng(seed)
    violations = 0
    worst = -math.inf
    details = {}
    if name == "gn":
        consts = {q: table.lookup(grid.dimension, q) for q in qs}
        worst_ratio = {q: 0.0 for q in qs}
        details["gamma_q"] = {str(q): gn_quotient(np.ones(grid.shape), grid, q).gamma_q for q in qs}
        for _ in range(trials):
            f = random_field(grid, rng)
            f *= math.sqrt(prm.masses[0] / float(grid.integrate(f * f)))
            for q in qs:
                rep = gn_quotient(f, grid, q)
                margin = rep.quotient - consts[q]
                worst_ratio[q] = max(worst_ratio[q], rep.quotient / consts[q])
                worst = max(worst, margin)
                violations += margin > 0
        details["constants"] = {str(q): consts[q] for q in qs}
        details["max_quotient_over_constant"] = {str(q): worst_ratio[q] for q in qs}
    elif name == "coercivity":
        energies = []
        for _ in range(trials):
            t = random_trifield(grid, rng, prm.masses)
            e = energy(t, pot, prm)
            margin = coercivity_bound(t, pot, prm, table) - e
            energies.append(e)
            worst = max(worst, margin)
            violations += margin > 0
        details["min_energy"] = float(min(energies))
        details["max_energy"] = float(max(energies))
    elif name == "symmetrize":
        for _ in range(trials):
            t = random_trifield(grid, rng, prm.masses)
            e0 = energy(t, pot, prm)
            e1 = energy(symmetrize(t), pot, prm)
            margin = e1 - e0
            worst = max(worst, margin)
            violations += margin > tie_rtol * _energy_scale(t, pot, prm)
    else:
        for _ in range(trials):
            t = random_trifield(grid, rng, prm.masses)
            j = energy(t, pot, prm)
            jf = energy_free(t, prm)
            vterm = 0.5 * float(np.sum(grid.integrate(pot.V * t.data ** 2)))
            scale = max(abs(j), abs(jf), abs(vterm), 1e-300)
            margin = abs((j - jf) - vterm) / scale
            worst = max(worst, margin)
            violations += margin > 1e-12
    return InequalityReport(name=name, trials=trials, violations=int(violations),
                            worst_margin=float(worst), seed=seed, grid=grid.spec.as_dict(),
                            params=prm.as_dict(), details=details)


def harmonic_oracle_cases(dimensions=(1, 3)):
    """Shipped oracle cases as (case, grid) pairs, unit masses, L = 8."""
    from .grid import GridSpec, build_grid
    cases = []
    for N in dimensions:
        prm = ModelParams(mu=0.0, beta=0.0, p=2.5 if N == 3 else 3.0, masses=1.0, dimension=N)
        grid = build_grid(GridSpec(dimension=N, half_width=8.0, points=256 if N == 1 else 48))
        cases.append((oracle_harmonic(prm, grid), grid))
    return cases
