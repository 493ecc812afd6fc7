import numpy as np
import pytest

from triwave import fieldio
from triwave.exceptions import ConfigurationError
from triwave.grid import FD_DIRICHLET, TriField, build_grid
from triwave.model import ModelParams, energy, sample_potential
from triwave.solver import (SolverOptions, continuation_in_beta, descent_step, initial_state,
                            minimize, renormalize, verify_theorem)


@pytest.fixture(scope="module")
def coupled_1d():
    g = build_grid(dimension=1, half_width=8.0, points=128)
    prm = ModelParams(mu=1.0, beta=1.0, p=3.0, masses=(1.0, 1.5, 2.0), dimension=1)
    pot = sample_potential("shifted_harmonic", g, offsets=(0.0, -1.0, -2.0))
    return g, prm, pot


@pytest.mark.parametrize("kw", [
    {"step_size": 0.0}, {"max_iters": 0}, {"tol_residual": -1.0}, {"init": "bogus"},
    {"init": "from_file"}, {"scheme": "newton"}, {"max_halvings": -1},
])
def test_options_validation(kw):
    with pytest.raises(ConfigurationError):
        SolverOptions(**kw)


def test_renormalize_hits_masses(grid2, rng):
    t = TriField(grid2, rng.standard_normal((3,) + grid2.shape))
    out = renormalize(t, (1.0, 2.0, 0.5))
    np.testing.assert_allclose(out.masses(), [1.0, 2.0, 0.5], rtol=1e-14)


def test_descent_step_decreases_energy(coupled_1d):
    g, prm, pot = coupled_1d
    t = renormalize(TriField(g, np.stack([g.gaussian(2.0)] * 3)), prm.masses)
    new = descent_step(t, pot, prm, 1e-3)
    assert energy(new, pot, prm) < energy(t, pot, prm)
    np.testing.assert_allclose(new.masses(), prm.masses, rtol=1e-14)


@pytest.mark.parametrize("scheme", ["explicit", "preconditioned"])
def test_coupled_solve_converges(coupled_1d, scheme):
    g, prm, pot = coupled_1d
    res = minimize(None, pot, prm, SolverOptions(scheme=scheme))
    assert res.converged, res.message
    assert np.all(np.diff(res.energy_history) <= 0)
    rep = verify_theorem(res, pot, prm)
    assert rep.passed, rep.failures


def test_schemes_agree(coupled_1d):
    g, prm, pot = coupled_1d
    a = minimize(None, pot, prm, SolverOptions(scheme="explicit"))
    b = minimize(None, pot, prm, SolverOptions(scheme="preconditioned"))
    assert a.energy == pytest.approx(b.energy, abs=1e-10)
    np.testing.assert_allclose(a.multipliers.as_array(), b.multipliers.as_array(), atol=1e-7)


def test_random_start_reaches_same_minimum(coupled_1d):
    g, prm, pot = coupled_1d
    ref = minimize(None, pot, prm, SolverOptions(scheme="preconditioned"))
    for seed in (1, 2):
        res = minimize(None, pot, prm, SolverOptions(scheme="preconditioned", init="random",
                                                     seed=seed))
        assert res.converged
        assert res.energy == pytest.approx(ref.energy, abs=1e-9)


def test_max_iters_reports_nonconvergence(coupled_1d):
    g, prm, pot = coupled_1d
    res = minimize(None, pot, prm, SolverOptions(max_iters=3))
    assert not res.converged
    assert res.iterations == 3
    assert res.message == "max_iters reached"
    assert not verify_theorem(res, pot, prm).passed


def test_without_line_search_returns_best_iterate(coupled_1d):
    g, prm, pot = coupled_1d
    res = minimize(None, pot, prm, SolverOptions(line_search=False, step_size=1e-3,
                                                 max_iters=50))
    assert res.energy <= res.energy_history.min() + 1e-12


def test_callback_sees_every_iteration(coupled_1d):
    g, prm, pot = coupled_1d
    seen = []
    res = minimize(None, pot, prm, SolverOptions(max_iters=20),
                   callback=lambda it, t, e, r, lam: seen.append((it, e)))
    assert [s[0] for s in seen] == list(range(21))
    np.testing.assert_allclose([s[1] for s in seen], res.energy_history, rtol=0, atol=0)


def test_fd_iterates_stay_nonnegative():
    g = build_grid(dimension=1, half_width=8.0, points=64, discretization=FD_DIRICHLET)
    prm = ModelParams(mu=1.0, beta=1.0, p=3.0, dimension=1)
    pot = sample_potential("harmonic", g)
    res = minimize(None, pot, prm, SolverOptions(scheme="preconditioned", init="random"))
    assert res.converged
    assert np.all(res.minimizer.data >= 0)


def test_init_from_file(coupled_1d, tmp_path):
    g, prm, pot = coupled_1d
    ref = minimize(None, pot, prm, SolverOptions(scheme="preconditioned"))
    path = fieldio.write_fields(tmp_path / "init.bin", g.spec, ref.minimizer.data)
    res = minimize(None, pot, prm, SolverOptions(init="from_file", init_path=str(path)))
    assert res.converged and res.iterations < 50
    other = build_grid(dimension=1, half_width=8.0, points=64)
    with pytest.raises(ConfigurationError):
        initial_state(other, prm, SolverOptions(init="from_file", init_path=str(path)))


def test_dimension_mismatch(coupled_1d):
    g, prm, pot = coupled_1d
    with pytest.raises(ConfigurationError):
        minimize(None, pot, ModelParams(dimension=3), None)


def test_continuation_is_monotone(coupled_1d):
    g, prm, pot = coupled_1d
    results = continuation_in_beta(pot, prm, [0.0, 0.5, 1.0, 2.0],
                                   SolverOptions(scheme="preconditioned"))
    m = [r.energy for r in results]
    assert all(r.converged for r in results)
    assert all(b <= a + 1e-10 for a, b in zip(m, m[1:]))


@pytest.mark.parametrize("betas", [[1.0, 0.5], [-1.0, 0.0]])
def test_continuation_rejects_bad_lists(coupled_1d, betas):
    g, prm, pot = coupled_1d
    with pytest.raises(ConfigurationError):
        continuation_in_beta(pot, prm, betas)


def test_verify_flags_sign_change(coupled_1d):
    g, prm, pot = coupled_1d
    res = minimize(None, pot, prm, SolverOptions(scheme="preconditioned"))
    data = res.minimizer.data.copy()
    data[1] *= -1.0
    res.minimizer = TriField(g, data)
    rep = verify_theorem(res, pot, prm)
    assert "positivity" in rep.failures
    assert rep.flagged_components == [2]


def test_mixed_sign_start_is_caught_by_verification(coupled_1d):
    # a sign-changing start can settle on a nodal critical point above the minimum
    from triwave.analysis import random_field
    g, prm, pot = coupled_1d
    r = np.random.default_rng(1)
    start = TriField(g, np.stack([random_field(g, r) for _ in range(3)]))
    res = minimize(start, pot, prm, SolverOptions(scheme="preconditioned"))
    ref = minimize(None, pot, prm, SolverOptions(scheme="preconditioned"))
    assert res.converged and res.energy > ref.energy + 1.0
    assert "positivity" in verify_theorem(res, pot, prm).failures
