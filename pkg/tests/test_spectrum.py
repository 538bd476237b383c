import numpy as np
import pytest

from zwrcool.errors import GridMismatch, TooFewBoundStates
from zwrcool.model import (ExponentialRepulsive, Harmonic, LinearDipole, MolecularModel, RadialGrid,
                           stand_in_model)
from zwrcool.spectrum import bound_spectrum, count_nodes, project_populations, spectrum_rows
from zwrcool.units import UNITS


def test_morse_closed_form(model, basis):
    exact = model.v1.levels(model.reduced_mass, 12)
    got = np.array([b.energy for b in basis])
    assert np.max(np.abs(got - exact)) < 1e-8


def test_harmonic_oracle():
    k, m = 1e-4, 2000.0
    g = RadialGrid(0.0, 20.0, 512)
    mod = MolecularModel(m, Harmonic(k, 10.0, -0.01), ExponentialRepulsive(1e-3, 0.3, 5.0, 1.0),
                         LinearDipole(1.0), g)
    states = bound_spectrum(mod, 5)
    w = np.sqrt(k / m)
    assert np.allclose([s.energy for s in states], -0.01 + w * (np.arange(6) + 0.5), atol=1e-10)


def test_states_normalized_and_signed(basis):
    dx = basis[0].grid.spacing
    for b in basis:
        assert abs(np.sum(b.wavefunction**2) * dx - 1) < 1e-12
        assert count_nodes(b.wavefunction) == b.v
        first = b.wavefunction[np.flatnonzero(np.abs(b.wavefunction) > 1e-2 * np.abs(b.wavefunction).max())[0]]
        assert first > 0


def test_too_few_bound_states(model):
    with pytest.raises(TooFewBoundStates):
        bound_spectrum(model, 20)


def test_empty_request(model):
    assert bound_spectrum(model, -1) == []


def test_projection_of_basis_state(basis):
    p = project_populations(basis[8].wavefunction, None, basis)
    assert abs(p.populations[8] - 1) < 1e-12
    assert abs(p.remainder) < 1e-12
    mix = (basis[7].wavefunction + basis[9].wavefunction) / np.sqrt(2)
    p = project_populations(mix, None, basis)
    assert abs(p.populations[7] - 0.5) < 1e-12 and abs(p.populations[9] - 0.5) < 1e-12


def test_projection_grid_mismatch(basis):
    with pytest.raises(GridMismatch):
        project_populations(np.zeros(100), None, basis)
    with pytest.raises(GridMismatch):
        project_populations(basis[0].wavefunction, None, basis, grid=RadialGrid(5, 55, 512))


def test_rows(basis):
    rows = spectrum_rows(basis[:3], UNITS.hartree_cm1)
    assert len(rows) == 3 and rows[0][0] == 0
