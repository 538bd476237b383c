import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zwrcool.errors import LostMinimum, PathFitMissing
from zwrcool.floquet import ResonanceTracker
from zwrcool.model import FieldPoint
from zwrcool.pathfinder import (OBJECTIVE_FLOOR, PathFit, ZwrPath, default_ladder, evaluate_path_on_states,
                                fit_line, golden_minimize, minimize_rung, trace_path)

SEED = 579.4167  # coincidence guess for (v, v+) = (8, 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.1, 10.0))
def test_golden_on_parabola(x0, curv):
    x, fx = golden_minimize(lambda x: curv * (x - x0) ** 2, -5.0, 5.0, 1e-8)
    assert abs(x - x0) < 1e-7
    assert fx >= 0


def test_golden_stops_at_floor():
    calls = []
    x, fx = golden_minimize(lambda x: calls.append(x) or -1.0, 0.0, 1.0, 1e-12, fstop=-1.0)
    assert len(calls) == 2 and fx == -1.0


def test_fit_line():
    i = np.array([1e5, 1e6, 1e7, 1e8])
    fit = fit_line(i, -0.7723229 * i / 1e8 + 576.3668)
    assert fit.a == pytest.approx(-0.7723229, rel=1e-10)
    assert fit.b == pytest.approx(576.3668, rel=1e-12)
    assert fit.rms < 1e-10
    one = fit_line([3e6], [577.0])
    assert (one.a, one.b, one.rms) == (0.0, 577.0, 0.0)
    with pytest.raises(PathFitMissing):
        fit_line([], [])
    with pytest.raises(PathFitMissing):
        ZwrPath(8, 0, []).require_fit()


@pytest.fixture(scope="module")
def tracker(model, basis):
    return ResonanceTracker(model, basis)


@pytest.fixture(scope="module")
def path(model, tracker):
    return trace_path(model, 8, 0, default_ladder(), SEED, tracker=tracker)


def test_path_is_straight(path):
    assert len(path.points) == 40
    assert np.all(np.diff(path.intensities) > 0)
    assert path.fit.a < 0 and path.fit.rms < 0.05
    assert path.gammas.max() < 1e-12


def test_path_points_are_local_minima(path, tracker):
    for p in path.points[::8]:
        lam = p.field.wavelength
        for off in (-0.25, 0.25):
            g = tracker.solve(FieldPoint(p.field.intensity, lam + off), 8, p.resonance).width
            assert math.log10(g) - math.log10(max(p.gamma, OBJECTIVE_FLOOR)) >= 2.0


def test_retrace_with_perturbed_seed(model, tracker, path):
    ladder = default_ladder()[::5]
    ref = path.wavelengths[::5]
    for shift in (-0.2, 0.2):
        other = trace_path(model, 8, 0, ladder, SEED + shift, tracker=tracker)
        assert np.abs(other.wavelengths - ref).max() < 1e-3


def test_single_rung(model, tracker):
    p = trace_path(model, 8, 0, [1e6], SEED, tracker=tracker)
    assert len(p.points) == 1
    assert p.fit.a == 0.0 and p.fit.b == p.points[0].field.wavelength


def test_bad_ladder(model):
    with pytest.raises(ValueError):
        trace_path(model, 8, 0, [1e6, 1e5], SEED)


def test_lost_minimum(tracker):
    # far from any coincidence the width is monotone across a narrow bracket
    with pytest.raises(LostMinimum):
        minimize_rung(tracker, 8, 1e6, 575.0, None, bracket=0.05)


def test_path_state_table(path, tracker):
    sub = ZwrPath(8, 0, path.points[::10], path.fit)
    tab = evaluate_path_on_states(sub, [8, 9], tracker=tracker)
    assert tab.gamma(8).max() < 1e-12
    assert tab.min_gamma(9) > 1e-10
    empty = evaluate_path_on_states(sub, [], tracker=tracker)
    assert empty.energies == {}
    with pytest.raises(ValueError):
        evaluate_path_on_states(sub, [8])


def test_fit_wavelength_vectorized():
    fit = PathFit(-1.0, 580.0, 0.0)
    assert np.allclose(fit.wavelength([0.0, 1e8]), [580.0, 579.0])
