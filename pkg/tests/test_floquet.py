import numpy as np
import pytest

from zwrcool.errors import ModelError, NotConverged
from zwrcool.floquet import (FloquetOperator, Method, ResonanceTracker, SolverSettings, dense_eigenpairs,
                             photon_blocks, solve_global, solve_grid_shooting, width_surface)
from zwrcool.floquet.operator import fd_second_derivative_weights
from zwrcool.model import FieldPoint, MolecularModel, RadialGrid, TabulatedPotential, stand_in_model
from zwrcool.spectrum import bound_spectrum


def test_photon_block_chain():
    assert photon_blocks(2) == [(1, 1), (2, 0)]
    assert photon_blocks(4) == [(1, 1), (2, 0), (2, 2), (1, -1)]
    with pytest.raises(ValueError):
        photon_blocks(1)


def test_fd_weights_exact_on_polynomials():
    for order in (2, 4, 8):
        c = fd_second_derivative_weights(order)
        x = np.arange(-(len(c) - 1), len(c))
        w = np.concatenate([c[:0:-1], c])
        for p in range(order + 2):
            expect = p * (p - 1) * 0.0**(p - 2) if p >= 2 else 0.0
            assert abs(np.dot(w, x.astype(float)**p) - expect) < 1e-9


def test_operator_complex_symmetric(model):
    op = FloquetOperator(model)
    k = op.matrix(FieldPoint(1e8, 576.0))
    assert abs(k - k.T).max() < 1e-15


def test_global_matches_dense_oracle():
    m = stand_in_model(grid=RadialGrid(6.0, 36.0, 256))
    bs = bound_spectrum(m, 9)
    f = FieldPoint(1e8, 575.0)
    w, _, _ = dense_eigenpairs(m, f)
    res = solve_global(m, f, seed=bs[8])
    nearest = w[np.argmin(np.abs(w - res.energy))]
    assert abs(nearest - res.energy) < 1e-11
    assert res.converged


@pytest.mark.parametrize("v", [6, 8, 10])
def test_uncoupled_limit_both_methods(model, basis, v):
    f = FieldPoint(0.0, 576.0)
    g = solve_global(model, f, seed=basis[v])
    s = solve_grid_shooting(model, f, basis[v].energy + f.omega, v)
    for r in (g, s):
        assert r.width < 1e-12
        assert abs(r.energy.real - (basis[v].energy + f.omega)) < 1e-8


def test_dual_method_agreement(model, basis):
    for lam in (566.0, 575.0, 583.0):
        f = FieldPoint(1e7, lam)
        g = solve_global(model, f, seed=basis[8])
        s = solve_grid_shooting(model, f, g.energy, 8)
        assert abs(g.energy.real - s.energy.real) < 1e-6
        assert abs(g.width - s.width) / g.width < 0.05


def test_grid_method_rejects_tabulated_inside_scaling(model):
    r = np.linspace(5, 60, 600)
    tab = MolecularModel(model.reduced_mass, TabulatedPotential(r, model.v1(r)), model.v2, model.mu12,
                         model.grid)
    with pytest.raises(ModelError):
        solve_grid_shooting(tab, FieldPoint(1e7, 576.0), -0.0008 + 0.079)


def test_global_not_converged(model, basis):
    with pytest.raises(NotConverged):
        solve_global(model, FieldPoint(1e8, 576.0), seed=basis[8],
                     settings=SolverSettings(max_iter=1))


def test_tracker_continuity(model, basis):
    tr = ResonanceTracker(model, basis)
    prev = None
    energies = []
    for lam in np.linspace(574, 578, 9):
        prev = tr.solve(FieldPoint(1e7, float(lam)), 8, prev)
        energies.append(prev.energy - prev.field.omega)
    # channel-1 energy moves smoothly (no hop to another level)
    steps = np.abs(np.diff(np.real(energies)))
    assert steps.max() < 1e-6


def test_width_surface_shapes(model, basis):
    s = width_surface(model, [1e6], [576.0], 8, basis=basis)
    assert s.gamma.shape == (1, 1) and s.converged.all()
    s = width_surface(model, [1e6, 2e6], np.linspace(570, 580, 5), 8, basis=basis, cross_every=3)
    assert s.gamma.shape == (2, 5) and np.all(np.isfinite(s.gamma))
    for _, _, dre, drel in s.cross_checks:
        assert dre < 1e-6


def test_width_linear_in_intensity(model, basis):
    tr = ResonanceTracker(model, basis)
    g = [tr.solve(FieldPoint(i, 575.0), 8).width for i in (1e5, 1e6)]
    slope = np.log10(g[1] / g[0])
    assert abs(slope - 1) < 0.05


def test_method_enum():
    assert Method("grid") is Method.GRID_SHOOTING
