import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zwrcool.errors import GridTooSmall, MissingWidthData, OverlapCollapse, StepTooLarge
from zwrcool.pathfinder import PathFit, PathStateTable
from zwrcool.pulse import synthesize
from zwrcool.spectrum import bound_spectrum
from zwrcool.model import RadialGrid, stand_in_model
from zwrcool.tdse import (AbsorberSettings, FrozenField, SplitOperator, ZeroField, adiabatic_survival_estimate,
                          effective_energy, expm_propagate, propagate, rolling_mean, width_along_pulse)

FIT = PathFit(-1.4265398018598898, 579.3384986148252, 0.0)


@pytest.fixture(scope="module")
def small():
    m = stand_in_model(grid=RadialGrid(5.0, 40.0, 256))
    return m, bound_spectrum(m, 12)


@pytest.fixture(scope="module")
def tiny():
    m = stand_in_model(grid=RadialGrid(6.0, 24.0, 128, strict=False))
    return m, bound_spectrum(m, 10)


def test_zero_field_stationary(small):
    m, basis = small
    drive = ZeroField(4000.0, 1.0)
    run = propagate(m, drive, 8, basis=basis)
    p = run.trace.population(8)
    assert np.abs(p - 1.0).max() < 1e-8
    auto = np.sum(basis[8].wavefunction * run.final.phi1[0]) * m.grid.spacing
    assert abs(auto - np.exp(-1j * basis[8].energy * 4000.0)) < 1e-8
    tr = effective_energy(run, 8)
    assert np.abs(tr.energy - basis[8].energy).max() < 1e-8
    assert np.abs(tr.rolling - basis[8].energy).max() < 1e-8


def test_norm_conserved_without_absorber(small):
    m, basis = small
    for drive in (ZeroField(1000.0, 1.0), FrozenField(2e-3, 1000.0, 1.0)):
        run = propagate(m, drive, [7, 8], basis=basis, absorber=None)
        assert np.abs(run.final.norm * m.grid.spacing - 1.0).max() < 1e-10


def test_time_reversal_frozen_field(small):
    m, basis = small
    prop = SplitOperator(m, None)
    psi = np.zeros((1, 2, m.grid.n_points), complex)
    psi[0, 0] = basis[8].wavefunction
    start = psi.copy()
    fields = np.full(len(prop.weights), 3e-3)
    prop.prepare(1.0)
    for _ in range(500):
        prop.step(psi, fields, 1.0)
    assert np.abs(psi - start).max() > 1e-3
    prop.prepare(-1.0)
    for _ in range(500):
        prop.step(psi, fields, -1.0)
    assert np.sqrt(np.sum(np.abs(psi - start) ** 2) * m.grid.spacing) < 1e-8


def test_pulse_run_invariants(small):
    m, basis = small
    p = synthesize(FIT, 0.2, "naive", i_max=1e9)
    run = propagate(m, p, [7, 8, 9], basis=basis)
    pops = run.trace.populations
    assert pops.min() >= 0 and pops.max() <= 1
    assert np.all(np.diff(run.trace.dissociated) >= -1e-15)
    total = pops.sum(axis=1) + run.trace.remainder + run.trace.dissociated
    assert np.abs(total - 1.0).max() < 1e-8


def test_coherent_mode(small):
    m, basis = small
    run = propagate(m, ZeroField(200.0, 1.0), {7: 1.0, 8: 1.0}, basis=basis, coherent=True)
    assert run.trace.member_populations.shape[0] == 1
    assert run.trace.population(7)[-1] == pytest.approx(0.5, abs=1e-10)


def test_oracle_short_pulse(tiny):
    m, basis = tiny
    p = synthesize(FIT, 0.02, i_max=1e8)
    a, b = expm_propagate(m, p, basis[8].wavefunction, step=1.0)
    run = propagate(m, p, 8, basis=basis, absorber=None)
    d = np.concatenate([run.final.phi1[0] - a, run.final.phi2[0] - b])
    assert np.sqrt(np.sum(np.abs(d) ** 2) * m.grid.spacing) < 1e-6


def test_grid_too_small(small):
    m, basis = small
    with pytest.raises(GridTooSmall):
        propagate(m, ZeroField(10.0, 1.0), 8, basis=basis, absorber=AbsorberSettings(start=0.1))
    with pytest.raises(GridTooSmall):
        propagate(m, ZeroField(10.0, 1.0), 8, basis=basis, absorber=AbsorberSettings(start=0.2))


def test_step_too_large(small):
    m, basis = small
    p = synthesize(FIT, 0.05, i_max=1e8)
    with pytest.raises(StepTooLarge):
        propagate(m, p, 8, basis=basis, dt=p.dt * 2)


def test_unknown_scheme(small):
    with pytest.raises(ValueError):
        SplitOperator(small[0], None, "euler")


def test_survival_estimate_trivial():
    p = synthesize(FIT, 1.0, i_max=1e8)
    t = p.times
    est = adiabatic_survival_estimate(lambda v, t: np.zeros_like(t), p, [8], t)
    assert np.all(est[8] == 1.0)
    g = 2e-6
    est = adiabatic_survival_estimate(lambda v, t: np.full_like(t, g), p, [9], t)
    assert np.allclose(est[9], np.exp(-g * t), rtol=1e-12)
    with pytest.raises(MissingWidthData):
        adiabatic_survival_estimate(None, p, [8], t)


def test_width_along_pulse_interpolates():
    p = synthesize(FIT, 1.0, i_max=1e8)
    i = np.array([1e6, 1e8])
    tab = PathStateTable(i, FIT.wavelength(i), {9: np.array([-0.5e-9j, -1e-7j])})
    t = np.array([0.0, p.envelope_law.t_half])
    assert np.allclose(width_along_pulse(tab, 9, p, t), [0.0, 2e-7])
    with pytest.raises(MissingWidthData):
        width_along_pulse(tab, 8, p, t)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(10.0, 50.0))
def test_rolling_mean_removes_oscillation(c, period):
    t = np.linspace(0.0, 40 * period, 8001)
    y = c + np.sin(2 * np.pi * t / period) + 1j * np.cos(2 * np.pi * t / period)
    r = rolling_mean(t, y, period)
    inner = (t > period) & (t < t[-1] - period)
    assert np.abs(r[inner] - c).max() < 1e-4


def test_overlap_collapse_flag(small):
    m, basis = small
    run = propagate(m, ZeroField(20.0, 1.0), 8, basis=basis)
    a, b = run.overlaps[8]
    run.overlaps[8] = (a * 0.0, b)
    tr = effective_energy(run, 8)
    assert tr.collapsed.all() and np.all(np.isnan(tr.energy))
    with pytest.raises(OverlapCollapse):
        effective_energy(run, 8, strict=True)
