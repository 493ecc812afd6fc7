"""
Uniform grids on the box [-L, L]^N and the discrete calculus used by the model.

Two discretizations are supported:

``spectral_periodic``
    Fourier pseudo-spectral derivatives on the periodic box. Gradients and
    Laplacians are exact for trigonometric polynomials resolved by the grid.
``fd_dirichlet``
    Second-order central differences with the field taken to be zero on the
    ghost layer just outside the node array. The discrete gradient energy is a
    sum of squared forward differences, so ``| |a| - |b| | <= |a - b|`` carries
    over to the discrete level (needed by :func:`triwave.model.symmetrize`).

Fields are plain ``numpy`` arrays of shape ``grid.shape`` (row-major over
axes). Every operator also accepts a stack of fields with extra leading axes,
e.g. the ``(3, n, ..., n)`` array inside a :class:`TriField`.

Example
-------
>>> grid = build_grid(GridSpec(dimension=1, half_width=1.0, points=8))
>>> grid.h, grid.weight
(0.25, 0.25)
>>> float(grid.integrate(np.ones(grid.shape)))
2.0
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .exceptions import ConfigurationError

SPECTRAL = "spectral_periodic"
FD_DIRICHLET = "fd_dirichlet"
DISCRETIZATIONS = (SPECTRAL, FD_DIRICHLET)


@dataclass(frozen=True)
class GridSpec:
    """Box half-width, resolution and discretization of a grid.

    Parameters
    ----------
    dimension : int
        Space dimension N, one of 1, 2, 3.
    half_width : float
        The box is [-half_width, half_width]^N.
    points : int
        Nodes per axis, n >= 8 (even for the spectral discretization).
    discretization : str
        ``"spectral_periodic"`` or ``"fd_dirichlet"``.
    """

    dimension: int = 3
    half_width: float = 8.0
    points: int = 32
    discretization: str = SPECTRAL

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ConfigurationError(
                f"dimension must be 1, 2 or 3, got {self.dimension}", key="grid.dimension")
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ConfigurationError(
                f"half_width must be positive, got {self.half_width}", key="grid.half_width")
        if int(self.points) != self.points or self.points < 8:
            raise ConfigurationError(
                f"points must be an integer >= 8, got {self.points}", key="grid.n")
        if self.discretization not in DISCRETIZATIONS:
            raise ConfigurationError(
                f"unknown discretization {self.discretization!r}; "
                f"expected one of {', '.join(DISCRETIZATIONS)}", key="grid.discretization")
        if self.discretization == SPECTRAL and self.points % 2:
            raise ConfigurationError(
                f"spectral_periodic needs an even number of points, got {self.points}",
                key="grid.n")

    def as_dict(self):
        return {"dimension": self.dimension, "half_width": self.half_width,
                "points": self.points, "discretization": self.discretization}


class Grid:
    """A built grid: node coordinates, quadrature weight and operators.

    Node ``j`` along each axis sits at ``-L + j*h`` with ``h = 2L/n``, so the
    origin is a node whenever ``n`` is even. Use :func:`build_grid` to create.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.dimension = spec.dimension
        self.n = int(spec.points)
        self.half_width = float(spec.half_width)
        self.h = 2.0 * self.half_width / self.n
        self.weight = self.h ** self.dimension
        self.shape = (self.n,) * self.dimension
        self.size = self.n ** self.dimension
        self.axis = -self.half_width + self.h * np.arange(self.n)
        self.axes = tuple(range(-self.dimension, 0))

    def __repr__(self):
        return (f"Grid(N={self.dimension}, L={self.half_width}, n={self.n}, "
                f"{self.discretization})")

    def __eq__(self, other):
        return isinstance(other, Grid) and other.spec == self.spec

    def __hash__(self):
        return hash(self.spec)

    @property
    def discretization(self):
        return self.spec.discretization

    @property
    def is_spectral(self):
        return self.spec.discretization == SPECTRAL

    @property
    def volume(self):
        return (2.0 * self.half_width) ** self.dimension

    @cached_property
    def coords(self):
        """Tuple of N coordinate arrays, each of shape ``grid.shape``."""
        return tuple(np.meshgrid(*([self.axis] * self.dimension), indexing="ij"))

    @cached_property
    def r2(self):
        """|x|^2 sampled at the nodes."""
        return sum(x * x for x in self.coords)

    @cached_property
    def ksq(self):
        """|k|^2 on the half-spectrum layout of ``rfftn``."""
        k = 2.0 * np.pi * sfft.fftfreq(self.n, d=self.h)
        kr = 2.0 * np.pi * sfft.rfftfreq(self.n, d=self.h)
        ks = [k] * (self.dimension - 1) + [kr]
        grids = np.meshgrid(*ks, indexing="ij")
        return sum(g * g for g in grids)

    @cached_property
    def _parseval_weights(self):
        # rfftn stores half the spectrum: interior columns stand for two modes
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    @cached_property
    def dirichlet_eigenvalues(self):
        """Eigenvalues of -Laplacian (FD, zero ghosts), DST-I ordering, full shape."""
        m = np.arange(1, self.n + 1)
        lam1 = (2.0 * np.sin(np.pi * m / (2.0 * (self.n + 1))) / self.h) ** 2
        grids = np.meshgrid(*([lam1] * self.dimension), indexing="ij")
        return sum(grids)

    # ------------------------------------------------------------------
    # reductions

    def integrate(self, f):
        """h^N times the sum of nodal values, over the trailing grid axes."""
        return self.weight * np.sum(f, axis=self.axes)

    def inner(self, f, g):
        return self.integrate(f * g)

    def norm(self, f):
        return np.sqrt(self.integrate(f * f))

    # ------------------------------------------------------------------
    # differential operators

    def laplacian(self, f):
        """Discrete Laplacian of ``f`` (stacks over leading axes allowed)."""
        f = np.asarray(f, dtype=float)
        if self.is_spectral:
            fh = sfft.rfftn(f, axes=self.axes)
            return sfft.irfftn(-self.ksq * fh, s=self.shape, axes=self.axes)
        out = (-2.0 * self.dimension) * f
        for ax in self.axes:
            out[_sl(ax, 1, None, f.ndim)] += f[_sl(ax, None, -1, f.ndim)]
            out[_sl(ax, None, -1, f.ndim)] += f[_sl(ax, 1, None, f.ndim)]
        return out / (self.h * self.h)

    def grad_sq_integral(self, f):
        r"""Discrete \int |\nabla f|^2.

        Spectral: :math:`\sum_k |k|^2 |\hat f_k|^2` by Parseval.
        FD: squared forward differences over every edge, ghosts included.
        """
        f = np.asarray(f, dtype=float)
        if self.is_spectral:
            fh = sfft.rfftn(f, axes=self.axes)
            dens = self.ksq * (fh.real ** 2 + fh.imag ** 2) * self._parseval_weights
            return self.weight / self.size * np.sum(dens, axis=self.axes)
        total = 0.0
        pad = [(0, 0)] * f.ndim
        for ax in self.axes:
            p = list(pad)
            p[ax] = (1, 1)
            d = np.diff(np.pad(f, p), axis=ax)
            total = total + np.sum(d * d, axis=self.axes)
        return self.weight / (self.h * self.h) * total

    def dirichlet_form(self, f, g):
        r"""Symmetric bilinear form :math:`-\int g\,\Delta f`."""
        return -self.integrate(g * self.laplacian(f))

    def solve_shifted(self, f, shift, scale=1.0):
        """Solve ``(shift - scale * Laplacian) g = f`` for g (shift > 0)."""
        f = np.asarray(f, dtype=float)
        if self.is_spectral:
            fh = sfft.rfftn(f, axes=self.axes)
            return sfft.irfftn(fh / (shift + scale * self.ksq), s=self.shape, axes=self.axes)
        fh = sfft.dstn(f, type=1, axes=self.axes)
        return sfft.idstn(fh / (shift + scale * self.dirichlet_eigenvalues), type=1,
                          axes=self.axes)

    # ------------------------------------------------------------------

    def gaussian(self, width=1.0):
        """exp(-|x|^2 / (2 width^2)) at the nodes."""
        return np.exp(-0.5 * self.r2 / (width * width))

    def core_mask(self, fraction=0.5):
        """Nodes with max-norm ``|x|_inf <= fraction * L``."""
        lim = fraction * self.half_width + 1e-12 * self.h
        mask = np.ones(self.shape, dtype=bool)
        for x in self.coords:
            mask &= np.abs(x) <= lim
        return mask


def _sl(axis, start, stop, ndim):
    idx = [slice(None)] * ndim
    idx[axis] = slice(start, stop)
    return tuple(idx)


def build_grid(spec: GridSpec | None = None, **kwargs) -> Grid:
    """Build a :class:`Grid` from a spec or from GridSpec keyword arguments."""
    if spec is None:
        spec = GridSpec(**kwargs)
    elif kwargs:
        raise TypeError("pass either a GridSpec or keyword arguments, not both")
    return Grid(spec)


@dataclass(frozen=True, eq=False)
class TriField:
    """The ordered triple (u, v, w) on one grid, stored as a (3, *shape) array."""

    grid: Grid
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.shape != (3,) + self.grid.shape:
            raise ValueError(f"expected data of shape {(3,) + self.grid.shape}, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_components(cls, grid, u, v, w):
        return cls(grid, np.stack([np.broadcast_to(c, grid.shape) for c in (u, v, w)]))

    @property
    def u(self):
        return self.data[0]

    @property
    def v(self):
        return self.data[1]

    @property
    def w(self):
        return self.data[2]

    def masses(self):
        """(|u|_2^2, |v|_2^2, |w|_2^2) as an array of 3."""
        return self.grid.integrate(self.data * self.data)

    def with_data(self, data):
        return TriField(self.grid, data)

    def copy(self):
        return TriField(self.grid, self.data.copy())
