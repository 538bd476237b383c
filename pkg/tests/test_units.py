import numpy as np
from hypothesis import given, strategies as st

from zwrcool.units import UNITS, UnitSystem


def test_codata_intensity_unit():
    # I = (1/2) c eps0 E^2 with E = 1 a.u.
    assert abs(UNITS.intensity_au / 3.50944758e16 - 1) < 1e-6


def test_wavelength_frequency_roundtrip():
    w = UNITS.nm_to_omega(576.0)
    assert abs(w - 0.0791030) < 1e-6
    assert abs(UNITS.omega_to_nm(w) - 576.0) < 1e-12


@given(st.floats(1e2, 1e14))
def test_intensity_amplitude_roundtrip(i):
    e = UNITS.intensity_to_amplitude(i)
    assert np.isclose(UNITS.amplitude_to_intensity(e), i, rtol=1e-12)


@given(st.floats(-1e5, 1e5))
def test_cm1_roundtrip(x):
    assert np.isclose(UNITS.hartree_to_cm1(UNITS.cm1_to_hartree(x)), x, rtol=1e-12, atol=1e-12)


def test_time_conversion():
    assert np.isclose(UNITS.ps_to_au(1.0), 41341.3736, rtol=1e-7)
    assert np.isclose(UNITS.au_to_ps(UNITS.ps_to_au(12.0)), 12.0)
    assert isinstance(UnitSystem.codata(), UnitSystem)
