import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from triwave.exceptions import (ConfigurationError, DegenerateFieldError, InputError,
                                UnsupportedDiscretizationError)
from triwave import fieldio
from triwave.gnconst import load_gn_table
from triwave.grid import FD_DIRICHLET, TriField, build_grid
from triwave.model import (ModelParams, coercivity_bound, el_gradient, el_residual, energy,
                           energy_change, energy_free, energy_terms, gn_quotient, multipliers,
                           sample_potential, symmetrize)
from triwave.solver import renormalize


def gaussian_triple(grid, amps=(1.0, 1.0, 1.0)):
    return TriField(grid, np.stack([a * grid.gaussian() for a in amps]))


def test_params_defaults_and_broadcast():
    prm = ModelParams(mu=2.0, masses=(1, 2, 3))
    assert prm.mu == (2.0, 2.0, 2.0)
    assert prm.masses == (1.0, 2.0, 3.0)


@pytest.mark.parametrize("kw, key, text", [
    ({"p": 4.0}, "model.p", "2 < p < 10/3"),
    ({"p": 2.0}, "model.p", "2 < p < 10/3"),
    ({"p": 6.0, "dimension": 1}, "model.p", "2 < p < 6"),
    ({"beta": -1.0}, "model.beta", "beta must be >= 0"),
    ({"mu": (1, -1, 1)}, "model.mu", "nonnegative"),
    ({"masses": (1, 0, 1)}, "model.masses", "positive"),
])
def test_params_validation(kw, key, text):
    with pytest.raises(ConfigurationError) as err:
        ModelParams(**kw)
    assert err.value.key == key
    assert text in str(err.value)


def test_energy_of_gaussians_closed_form():
    # u = A exp(-|x|^2/2) in N = 3: |u|^2 = A^2 pi^1.5, |grad u|^2 = 1.5 A^2 pi^1.5,
    # int x^2 u^2 = 1.5 A^2 pi^1.5, int |u|^p = A^p (2 pi/p)^1.5, int uvw = ABC (2 pi/3)^1.5
    g = build_grid(dimension=3, half_width=8.0, points=48)
    amps = (1.0, 0.5, 2.0)
    t = gaussian_triple(g, amps)
    prm = ModelParams(mu=(1.0, 2.0, 0.5), beta=0.7, p=2.5)
    pot = sample_potential("shifted_harmonic", g, offsets=(0.0, -1.0, 3.0))
    pi15 = math.pi ** 1.5
    A = np.array(amps)
    kin = 1.5 * A ** 2 * pi15
    vpot = 1.5 * A ** 2 * pi15 + np.array([0.0, -1.0, 3.0]) * A ** 2 * pi15
    nl = A ** 2.5 * (2 * math.pi / 2.5) ** 1.5
    cup = A.prod() * (2 * math.pi / 3) ** 1.5
    expected = 0.5 * kin.sum() + 0.5 * vpot.sum() - np.dot(prm.mu, nl) / 2.5 - 0.7 * cup
    assert energy(t, pot, prm) == pytest.approx(expected, rel=1e-12)
    terms = energy_terms(t, pot, prm)
    np.testing.assert_allclose(terms["kinetic"], kin, rtol=1e-12)
    assert energy_free(t, prm) == pytest.approx(expected - 0.5 * vpot.sum(), rel=1e-12)


@pytest.mark.parametrize("disc", ["spectral_periodic", FD_DIRICHLET])
def test_gradient_matches_central_differences(disc, rng):
    g = build_grid(dimension=2, half_width=6.0, points=24, discretization=disc)
    prm = ModelParams(mu=(1.0, 0.5, 2.0), beta=1.3, p=2.7, dimension=2)
    pot = sample_potential("shifted_harmonic", g, offsets=(0.0, -1.0, -2.0))
    t = TriField(g, np.abs(rng.standard_normal((3,) + g.shape)) * g.gaussian(2.0) + 0.1 * g.gaussian())
    G = el_gradient(t, pot, prm).data
    for _ in range(5):
        eta = rng.standard_normal(t.data.shape) * g.gaussian(3.0)
        exact = float(np.sum(g.integrate(G * eta)))
        errs = []
        for eps in (1e-3, 5e-4):
            plus = energy(t.with_data(t.data + eps * eta), pot, prm)
            minus = energy(t.with_data(t.data - eps * eta), pot, prm)
            errs.append(abs((plus - minus) / (2 * eps) - exact))
        assert errs[0] < 1e-4 * max(1.0, abs(exact))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_harmonic_multipliers_and_residual():
    g = build_grid(dimension=1, half_width=8.0, points=128)
    prm = ModelParams(mu=0.0, beta=0.0, masses=(2.0, 1.0, 1.0), dimension=1)
    pot = sample_potential("harmonic", g)
    t = renormalize(gaussian_triple(g), prm.masses)
    lam = multipliers(t, pot, prm)
    np.testing.assert_allclose(lam.as_array(), -1.0, atol=1e-12)
    assert max(el_residual(t, pot, prm, lam)) < 1e-10


def test_multipliers_reject_zero_component(grid1):
    t = TriField.from_components(grid1, grid1.gaussian(), 0.0, grid1.gaussian())
    with pytest.raises(DegenerateFieldError):
        multipliers(t, sample_potential("zero", grid1), ModelParams(dimension=1))


def test_potential_kinds(grid2, tmp_path):
    h = sample_potential("harmonic", grid2)
    assert h.minima == (0.0, 0.0, 0.0) and all(h.coercive)
    s = sample_potential("shifted_harmonic", grid2, offsets=(0, -1, -2))
    assert s.minima == (0.0, -1.0, -2.0)
    a = sample_potential("anisotropic", grid2, weights=[[1, 2], [0, 1], [1, 1]])
    assert a.coercive == (True, False, True)
    np.testing.assert_allclose(a.V1, grid2.coords[0] ** 2 + 2 * grid2.coords[1] ** 2)
    path = fieldio.write_fields(tmp_path / "v.bin", grid2.spec, grid2.r2)
    f = sample_potential("from_file", grid2, path=path)
    np.testing.assert_array_equal(f.V, h.V)
    assert f.coercive == (False, False, False)


@pytest.mark.parametrize("kw", [
    {"kind": "quartic"},
    {"kind": "shifted_harmonic"},
    {"kind": "anisotropic"},
    {"kind": "anisotropic", "weights": [1.0, -1.0]},
    {"kind": "anisotropic", "weights": [1.0, 1.0, 1.0]},
])
def test_potential_errors(grid2, kw):
    with pytest.raises(ConfigurationError):
        sample_potential(grid=grid2, **kw)


def test_potential_file_grid_mismatch(grid2, grid1, tmp_path):
    path = fieldio.write_fields(tmp_path / "v.bin", grid1.spec, grid1.r2)
    with pytest.raises(InputError):
        sample_potential("from_file", grid2, path=path)


def test_gn_quotient_values(grid3):
    g = build_grid(dimension=3, half_width=8.0, points=32)
    rep = gn_quotient(g.gaussian(), g, 4.0)
    assert rep.gamma_q == 0.75
    assert rep.quotient < load_gn_table().lookup(3, 4.0)
    assert gn_quotient(np.ones(g.shape), g, 4.0).quotient == math.inf
    with pytest.raises(DegenerateFieldError):
        gn_quotient(np.zeros(g.shape), g, 3.0)
    with pytest.raises(ConfigurationError):
        gn_quotient(g.gaussian(), g, 6.0)


def test_coercivity_bound_below_energy_for_gaussians():
    g = build_grid(dimension=3, half_width=8.0, points=24)
    prm = ModelParams(mu=1.0, beta=2.0, p=2.5)
    pot = sample_potential("shifted_harmonic", g, offsets=(0, -1, -2))
    table = load_gn_table()
    for width in (0.4, 0.7, 1.0, 2.0):
        t = renormalize(TriField(g, np.stack([g.gaussian(width)] * 3)), prm.masses)
        assert coercivity_bound(t, pot, prm, table) <= energy(t, pot, prm)


def test_symmetrize(grid1, grid1_fd, rng):
    with pytest.raises(UnsupportedDiscretizationError):
        symmetrize(TriField(grid1, rng.standard_normal((3,) + grid1.shape)))
    t = TriField(grid1_fd, rng.standard_normal((3,) + grid1_fd.shape))
    s = symmetrize(t)
    np.testing.assert_array_equal(s.data, np.abs(t.data))
    pot = sample_potential("harmonic", grid1_fd)
    prm = ModelParams(beta=1.0, dimension=1)
    assert energy(s, pot, prm) <= energy(t, pot, prm)


@given(seed=st.integers(0, 2 ** 31), scale=st.floats(1e-9, 1e-1))
def test_energy_change_matches_difference(seed, scale):
    g = build_grid(dimension=1, half_width=6.0, points=32)
    prm = ModelParams(mu=(1, 2, 0.5), beta=0.8, p=2.5, dimension=1)
    pot = sample_potential("shifted_harmonic", g, offsets=(0, -1, 2))
    r = np.random.default_rng(seed)
    old = TriField(g, r.standard_normal((3,) + g.shape) * g.gaussian(2.0))
    new = old.with_data(old.data + scale * r.standard_normal(old.data.shape))
    direct = energy(new, pot, prm) - energy(old, pot, prm)
    de = energy_change(old, new, pot, prm)
    ref = max(abs(energy(old, pot, prm)), 1.0)
    assert de == pytest.approx(direct, abs=1e-13 * ref)


@given(seed=st.integers(0, 2 ** 31), beta=st.floats(0.0, 3.0))
def test_decomposition_identity(seed, beta):
    g = build_grid(dimension=2, half_width=6.0, points=16)
    prm = ModelParams(beta=beta, p=2.5, dimension=2)
    pot = sample_potential("shifted_harmonic", g, offsets=(0.5, -1, -2))
    t = TriField(g, np.random.default_rng(seed).standard_normal((3,) + g.shape))
    lhs = energy(t, pot, prm) - energy_free(t, prm)
    rhs = 0.5 * float(np.sum(g.integrate(pot.V * t.data ** 2)))
    assert lhs == pytest.approx(rhs, rel=1e-12)
