"""Conversions between laboratory units and atomic units.

Everything inside the package runs in atomic units (hbar = m_e = e = 1).
Inputs and outputs use nm, W/cm^2, cm^-1 and ps.  The constants come from
``scipy.constants`` (CODATA), so a single source feeds every conversion.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants as _sc


@dataclass(frozen=True)
class UnitSystem:
    """Conversion factors between lab units and atomic units.

    Attributes:
        c_au: speed of light in atomic units (1/alpha).
        bohr_nm: one bohr in nanometers.
        hartree_cm1: one hartree in cm^-1.
        au_time_ps: one atomic time unit in picoseconds.
        intensity_au: intensity (W/cm^2) of a field with amplitude 1 a.u.,
            using the cycle-averaged relation I = c*eps0*E^2/2.
    """

    c_au: float
    bohr_nm: float
    hartree_cm1: float
    au_time_ps: float
    intensity_au: float

    @classmethod
    def codata(cls) -> "UnitSystem":
        pc = _sc.physical_constants
        e_au = pc["atomic unit of electric field"][0]  # V/m
        i_au = 0.5 * _sc.c * _sc.epsilon_0 * e_au**2 * 1e-4  # W/cm^2
        return cls(
            c_au=1.0 / _sc.alpha,
            bohr_nm=pc["Bohr radius"][0] * 1e9,
            hartree_cm1=pc["hartree-inverse meter relationship"][0] * 1e-2,
            au_time_ps=pc["atomic unit of time"][0] * 1e12,
            intensity_au=i_au,
        )

    # wavelength <-> angular frequency
    def nm_to_omega(self, nm):
        return 2.0 * np.pi * self.c_au * self.bohr_nm / np.asarray(nm, dtype=float)

    def omega_to_nm(self, omega):
        return 2.0 * np.pi * self.c_au * self.bohr_nm / np.asarray(omega, dtype=float)

    # intensity <-> amplitude
    def intensity_to_amplitude(self, intensity):
        return np.sqrt(np.asarray(intensity, dtype=float) / self.intensity_au)

    def amplitude_to_intensity(self, amplitude):
        return np.asarray(amplitude, dtype=float) ** 2 * self.intensity_au

    # energy
    def cm1_to_hartree(self, cm1):
        return np.asarray(cm1) / self.hartree_cm1

    def hartree_to_cm1(self, hartree):
        return np.asarray(hartree) * self.hartree_cm1

    # time
    def ps_to_au(self, ps):
        return np.asarray(ps, dtype=float) / self.au_time_ps

    def au_to_ps(self, t):
        return np.asarray(t, dtype=float) * self.au_time_ps


UNITS = UnitSystem.codata()
