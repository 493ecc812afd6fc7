"""
Energy functional of the three-wave Schrodinger system and its diagnostics.

For a triple (u, v, w) with trapping potentials V1, V2, V3 the energy is

    J = 1/2 sum_i int(|grad u_i|^2 + V_i u_i^2)
        - sum_i (mu_i / p) int |u_i|^p - beta int u v w,

and J_free is the same expression with every V_i set to zero. Critical points
of J on the set of fixed masses solve

    -Lap u + (V1 + lam1) u = mu1 |u|^(p-2) u + beta v w    (and cyclically),

with the multipliers lam_i determined by pairing each equation with its own
component. All integrals go through the grid, so discrete identities such as
J - J_free = 1/2 int sum V_i u_i^2 hold to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fieldio
from .exceptions import (ConfigurationError, DegenerateFieldError, InputError,
                         UnsupportedDiscretizationError)
from .gnconst import gn_exponent, q_upper
from .grid import Grid, TriField


def _triple(value, name, key):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (3,))
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} must be finite, got {value}", key=key)
    return tuple(float(x) for x in arr)


def critical_exponent(dimension):
    """Mass-critical exponent 2 + 4/N; admissible p lie strictly below it."""
    return 2.0 + 4.0 / dimension


def _fmt_critical(dimension):
    return {1: "6", 2: "4", 3: "10/3"}[dimension]


@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity strengths, coupling, exponent, target masses and dimension.

    ``mu`` and ``masses`` take a scalar (applied to all three components) or a
    sequence of three. ``mu_i = 0`` and ``beta = 0`` are admitted as linear and
    decoupled test modes.
    """

    mu: tuple = (1.0, 1.0, 1.0)
    beta: float = 0.0
    p: float = 3.0
    masses: tuple = (1.0, 1.0, 1.0)
    dimension: int = 3

    def __post_init__(self):
        mu = _triple(self.mu, "mu", "model.mu")
        masses = _triple(self.masses, "masses", "model.masses")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "masses", masses)
        if self.dimension not in (1, 2, 3):
            raise ConfigurationError(f"dimension must be 1, 2 or 3, got {self.dimension}",
                                     key="grid.dimension")
        if any(m < 0 for m in mu):
            raise ConfigurationError(f"mu must be nonnegative, got {mu}", key="model.mu")
        if any(m <= 0 for m in masses):
            raise ConfigurationError(f"masses must be positive, got {masses}", key="model.masses")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ConfigurationError(
                f"beta must be >= 0 (existence of a positive ground state needs beta > 0), "
                f"got {self.beta}", key="model.beta")
        pc = critical_exponent(self.dimension)
        if not (math.isfinite(self.p) and 2.0 < self.p < pc):
            raise ConfigurationError(
                f"p = {self.p:g} is outside the admissible range 2 < p < "
                f"{_fmt_critical(self.dimension)} for N = {self.dimension}", key="model.p")

    @property
    def mu_array(self):
        return np.asarray(self.mu)

    @property
    def mass_array(self):
        return np.asarray(self.masses)

    def as_dict(self):
        return {"mu": list(self.mu), "beta": self.beta, "p": self.p,
                "masses": list(self.masses), "dimension": self.dimension}


@dataclass(frozen=True, eq=False)
class PotentialSet:
    """Sampled potentials V1, V2, V3 with their sampled minima."""

    grid: Grid
    V: np.ndarray = field(repr=False)
    minima: tuple
    coercive: tuple
    kind: str = "custom"

    @property
    def V1(self):
        return self.V[0]

    @property
    def V2(self):
        return self.V[1]

    @property
    def V3(self):
        return self.V[2]


@dataclass(frozen=True)
class Multipliers:
    lambda1: float
    lambda2: float
    lambda3: float

    def as_array(self):
        return np.array([self.lambda1, self.lambda2, self.lambda3])

    def __iter__(self):
        return iter((self.lambda1, self.lambda2, self.lambda3))


@dataclass(frozen=True)
class GNReport:
    q: float
    gamma_q: float
    quotient: float


POTENTIAL_KINDS = ("zero", "harmonic", "shifted_harmonic", "anisotropic", "from_file")


def sample_potential(kind, grid: Grid, offsets=None, weights=None, path=None) -> PotentialSet:
    """Sample V1, V2, V3 at the grid nodes.

    Parameters
    ----------
    kind : str
        ``zero``; ``harmonic`` (|x|^2, optional ``offsets``);
        ``shifted_harmonic`` (|x|^2 + offset_i, ``offsets`` required);
        ``anisotropic`` (sum_j weight_j x_j^2 + offset_i; ``weights`` of shape
        (N,) or (3, N)); ``from_file`` (binary field file with 1 or 3
        components on this grid).
    """
    if kind not in POTENTIAL_KINDS:
        raise ConfigurationError(f"unknown potential kind {kind!r}; expected one of "
                                 f"{', '.join(POTENTIAL_KINDS)}", key="potential.kind")
    if kind == "shifted_harmonic" and offsets is None:
        raise ConfigurationError("shifted_harmonic needs per-component offsets",
                                 key="potential.offsets")
    off = np.asarray(_triple(0.0 if offsets is None else offsets, "offsets", "potential.offsets"))

    if kind == "zero":
        V = np.zeros((3,) + grid.shape)
        coercive = (False, False, False)
    elif kind in ("harmonic", "shifted_harmonic"):
        V = grid.r2[None] + off.reshape((3,) + (1,) * grid.dimension)
        coercive = (True, True, True)
    elif kind == "anisotropic":
        if weights is None:
            raise ConfigurationError("anisotropic potential needs weights", key="potential.weights")
        wts = np.asarray(weights, dtype=float)
        if wts.shape == (grid.dimension,):
            wts = np.broadcast_to(wts, (3, grid.dimension))
        if wts.shape != (3, grid.dimension) or not np.all(np.isfinite(wts)):
            raise ConfigurationError(
                f"weights must have shape ({grid.dimension},) or (3, {grid.dimension})",
                key="potential.weights")
        if np.any(wts < 0):
            raise ConfigurationError("anisotropic weights must be nonnegative "
                                     "(V_i(0) must be the minimum)", key="potential.weights")
        V = np.stack([sum(wts[i, j] * grid.coords[j] ** 2 for j in range(grid.dimension)) + off[i]
                      for i in range(3)])
        coercive = tuple(bool(np.all(wts[i] > 0)) for i in range(3))
    else:
        if path is None:
            raise ConfigurationError("from_file potential needs a path", key="potential.path")
        spec, vals = fieldio.read_fields(path)
        if spec.dimension != grid.dimension or spec.points != grid.n or \
                not np.isclose(spec.half_width, grid.half_width):
            raise InputError(f"{path}: potential grid (N={spec.dimension}, n={spec.points}, "
                             f"L={spec.half_width}) does not match {grid}")
        if vals.shape[0] == 1:
            vals = np.repeat(vals, 3, axis=0)
        elif vals.shape[0] != 3:
            raise InputError(f"{path}: expected 1 or 3 components, got {vals.shape[0]}")
        V = vals + off.reshape((3,) + (1,) * grid.dimension)
        # coercivity cannot be inferred from samples
        coercive = (False, False, False)
    minima = tuple(float(m) for m in V.reshape(3, -1).min(axis=1))
    return PotentialSet(grid=grid, V=np.ascontiguousarray(V), minima=minima,
                        coercive=coercive, kind=kind)


def _check_grid(t: TriField, pot: PotentialSet | None = None):
    if pot is not None and pot.grid != t.grid:
        raise ValueError(f"field grid {t.grid} differs from potential grid {pot.grid}")


def _power(x, p):
    return np.abs(x) ** p


def _odd_power(x, p):
    # |x|^(p-2) x, with value 0 at x = 0 for every p > 2
    return np.abs(x) ** (p - 1.0) * np.sign(x)


def _partner_products(d):
    return np.stack([d[1] * d[2], d[0] * d[2], d[0] * d[1]])


def energy_terms(t: TriField, pot: PotentialSet | None, prm: ModelParams):
    """Components of J: kinetic, potential and nonlinear per field, and coupling.

    ``kinetic`` and ``potential`` are the full integrals (without the 1/2),
    ``nonlinear`` holds int |u_i|^p (without mu_i / p).
    """
    _check_grid(t, pot)
    g, d = t.grid, t.data
    out = {
        "kinetic": g.grad_sq_integral(d),
        "nonlinear": g.integrate(_power(d, prm.p)),
        "coupling": float(g.integrate(d[0] * d[1] * d[2])),
    }
    out["potential"] = np.zeros(3) if pot is None else g.integrate(pot.V * d * d)
    return out


def _assemble(terms, prm, with_potential):
    e = 0.5 * float(np.sum(terms["kinetic"]))
    if with_potential:
        e += 0.5 * float(np.sum(terms["potential"]))
    e -= float(np.sum(prm.mu_array * terms["nonlinear"])) / prm.p
    e -= prm.beta * terms["coupling"]
    return e


def energy(t: TriField, pot: PotentialSet, prm: ModelParams) -> float:
    """The energy J(u, v, w)."""
    return _assemble(energy_terms(t, pot, prm), prm, True)


def energy_free(t: TriField, prm: ModelParams) -> float:
    """The potential-free energy J_free(u, v, w)."""
    return _assemble(energy_terms(t, None, prm), prm, False)


def el_gradient(t: TriField, pot: PotentialSet, prm: ModelParams, laplacian=None) -> TriField:
    """Unconstrained L2 gradient of J.

    G_u = -Lap u + V1 u - mu1 |u|^(p-2) u - beta v w, and cyclically. A
    precomputed Laplacian of ``t.data`` can be passed to avoid recomputing it.
    """
    _check_grid(t, pot)
    d = t.data
    lap = t.grid.laplacian(d) if laplacian is None else laplacian
    mu = prm.mu_array.reshape((3,) + (1,) * t.grid.dimension)
    G = -lap + pot.V * d - mu * _odd_power(d, prm.p) - prm.beta * _partner_products(d)
    return TriField(t.grid, G)


def multipliers(t: TriField, pot: PotentialSet, prm: ModelParams) -> Multipliers:
    """Lagrange multipliers from pairing each equation with its own component.

    lam_i = (mu_i |u_i|_p^p + beta int uvw - int |grad u_i|^2 - int V_i u_i^2) / |u_i|_2^2
    """
    terms = energy_terms(t, pot, prm)
    mass = t.masses()
    if np.any(mass <= 0):
        raise DegenerateFieldError(
            f"multiplier undefined: component(s) {list(np.flatnonzero(mass <= 0) + 1)} "
            f"have zero mass")
    num = (prm.mu_array * terms["nonlinear"] + prm.beta * terms["coupling"]
           - terms["kinetic"] - terms["potential"])
    lam = num / mass
    return Multipliers(*(float(x) for x in lam))


def el_residual(t: TriField, pot: PotentialSet, prm: ModelParams, lam: Multipliers):
    """L2 norms of G_i + lam_i u_i, one per component."""
    G = el_gradient(t, pot, prm).data
    lam_b = np.asarray(list(lam)).reshape((3,) + (1,) * t.grid.dimension)
    R = G + lam_b * t.data
    return tuple(float(x) for x in np.sqrt(t.grid.integrate(R * R)))


def gn_quotient(f, grid: Grid, q: float) -> GNReport:
    """Observed GN quotient |f|_q / (|grad f|_2^g |f|_2^(1-g)), g = N(q-2)/(2q).

    Returns an infinite quotient for a nonzero field with vanishing gradient
    (constants on a periodic grid) when g > 0.
    """
    N = grid.dimension
    if not (2.0 <= q < q_upper(N)):
        raise ConfigurationError(f"q = {q:g} outside [2, {q_upper(N):g}) for N = {N}")
    f = np.asarray(f, dtype=float)
    l2 = math.sqrt(float(grid.integrate(f * f)))
    if l2 == 0.0:
        raise DegenerateFieldError("GN quotient undefined for the zero field")
    g = gn_exponent(q, N)
    lq = float(grid.integrate(np.abs(f) ** q)) ** (1.0 / q)
    grad = math.sqrt(float(grid.grad_sq_integral(f)))
    if grad == 0.0:
        quotient = lq / l2 if g == 0.0 else math.inf
    else:
        quotient = lq / (grad ** g * l2 ** (1.0 - g))
    return GNReport(q=q, gamma_q=g, quotient=quotient)


def coercivity_bound(t: TriField, pot: PotentialSet, prm: ModelParams, table) -> float:
    """Lower bound for J(t) built from GN constants.

    With K_i = |grad u_i|_2, m_i = |u_i|_2^2, g_p = N(p-2)/(2p):

        1/2 sum K_i^2
        - sum (mu_i/p) C_p^p m_i^((1-g_p) p/2) K_i^(N(p-2)/2)
        - (beta/3) sum C_3^3 m_i^((1-g_3) 3/2) K_i^(N/2)
        + 1/2 sum c_i m_i

    The cubic term bounds beta int uvw through int uvw <= 1/3 sum int |u_i|^3,
    and c_i = min V_i gives int V_i u_i^2 >= c_i m_i. J(t) is never below the
    returned value when the table holds valid GN constants.
    """
    _check_grid(t, pot)
    N, p = t.grid.dimension, prm.p
    K = np.sqrt(t.grid.grad_sq_integral(t.data))
    m = t.masses()
    bound = 0.5 * float(np.sum(K * K))
    if np.any(prm.mu_array > 0):
        Cp = table.lookup(N, p)
        gp = gn_exponent(p, N)
        bound -= float(np.sum(prm.mu_array / p * Cp ** p * m ** ((1 - gp) * p / 2)
                              * K ** (N * (p - 2) / 2)))
    if prm.beta > 0:
        C3 = table.lookup(N, 3.0)
        g3 = gn_exponent(3.0, N)
        bound -= prm.beta / 3.0 * float(np.sum(C3 ** 3 * m ** ((1 - g3) * 1.5) * K ** (N / 2)))
    bound += 0.5 * float(np.dot(pot.minima, m))
    return bound


def symmetrize(t: TriField) -> TriField:
    """(|u|, |v|, |w|), which never raises J on FD grids when beta >= 0."""
    if t.grid.is_spectral:
        raise UnsupportedDiscretizationError(
            "symmetrize needs fd_dirichlet: the spectral gradient energy of |u| can exceed "
            "that of u")
    return t.with_data(np.abs(t.data))


def energy_change(old: TriField, new: TriField, pot: PotentialSet, prm: ModelParams,
                  lap_old=None, lap_new=None) -> float:
    """J(new) - J(old), evaluated from differences to avoid cancellation.

    Each term is rewritten so that the rounding error scales with the size of
    ``new - old`` rather than with J itself; near a minimizer this resolves
    energy decreases far below ``eps * |J|``.
    """
    g = old.grid
    a, b = new.data, old.data
    delta = a - b
    lap_a = g.laplacian(a) if lap_new is None else lap_new
    lap_b = g.laplacian(b) if lap_old is None else lap_old
    kin = -0.5 * float(np.sum(g.integrate(delta * (lap_a + lap_b))))
    pot_term = 0.5 * float(np.sum(g.integrate(pot.V * delta * (a + b))))

    p = prm.p
    same = (a * b) > 0
    ratio = np.where(same, delta / np.where(same, b, 1.0), 0.0)
    dpow = np.where(same, np.abs(b) ** p * np.expm1(p * np.log1p(ratio)),
                    np.abs(a) ** p - np.abs(b) ** p)
    nonlin = float(np.sum(prm.mu_array * g.integrate(dpow))) / p

    # a1 a2 a3 - b1 b2 b3, telescoped
    dcub = delta[0] * a[1] * a[2] + b[0] * delta[1] * a[2] + b[0] * b[1] * delta[2]
    coup = prm.beta * float(g.integrate(dcub))
    return kin + pot_term - nonlin - coup
