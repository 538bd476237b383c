"""Two-state diatomic model: potentials, dipole, grid and field dressing.

The model is the pair of diabatic curves V1 (bound) and V2 (repulsive)
coupled by a transition dipole mu12.  A laser of angular frequency omega
dresses V1 by one photon; the dressed diabatic curves V1 + omega and V2
cross at R0, and diagonalizing the 2x2 dressed potential matrix with
off-diagonal coupling mu12*E/2 gives the adiabatic curves V+ and V-,
separated by |mu12*E| at R0.

Potential objects are plain callables R -> hartree.  The analytic ones accept
complex R, which the complex-rotation solver relies on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import Akima1DInterpolator
from scipy.optimize import bisect

from .errors import ModelError, MultipleCrossings, NoCrossing
from .units import UNITS

MIN_GRID_POINTS = 256


# --------------------------------------------------------------------------
# grid and field
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid r_i = r_min + i*dx, i = 0..n-1, dx = (r_max - r_min)/n.

    The right end point is excluded so the grid is also a valid periodic
    FFT grid.  ``strict=False`` lifts the minimum size (used for coarse
    oracle runs only).
    """

    r_min: float
    r_max: float
    n_points: int
    strict: bool = True

    def __post_init__(self):
        if not self.r_max > self.r_min:
            raise ModelError(f"grid needs r_max > r_min, got {self.r_min}, {self.r_max}")
        if self.strict and self.n_points < MIN_GRID_POINTS:
            raise ModelError(f"grid needs at least {MIN_GRID_POINTS} points, got {self.n_points}")
        if self.n_points < 8:
            raise ModelError("grid too small")

    @property
    def spacing(self) -> float:
        return (self.r_max - self.r_min) / self.n_points

    @property
    def r(self) -> np.ndarray:
        return self.r_min + self.spacing * np.arange(self.n_points)

    def refined(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.r_min, self.r_max, self.n_points * factor, self.strict)

    def resized(self, n_points: int) -> "RadialGrid":
        return RadialGrid(self.r_min, self.r_max, n_points, strict=False)


@dataclass(frozen=True)
class FieldPoint:
    """Laser parameters: intensity in W/cm^2 and wavelength in nm."""

    intensity: float
    wavelength: float

    def __post_init__(self):
        if not np.isfinite(self.intensity) or self.intensity < 0:
            raise ModelError(f"intensity must be >= 0, got {self.intensity}")
        if not np.isfinite(self.wavelength) or self.wavelength <= 0:
            raise ModelError(f"wavelength must be > 0, got {self.wavelength}")

    @property
    def amplitude(self) -> float:
        return float(UNITS.intensity_to_amplitude(self.intensity))

    @property
    def omega(self) -> float:
        return float(UNITS.nm_to_omega(self.wavelength))

    def with_intensity(self, intensity: float) -> "FieldPoint":
        return FieldPoint(intensity, self.wavelength)

    def with_wavelength(self, wavelength: float) -> "FieldPoint":
        return FieldPoint(self.intensity, wavelength)


# --------------------------------------------------------------------------
# potentials
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Morse:
    """V(R) = de*(1 - exp(-a(R - re)))^2 - de + offset."""

    de: float
    re: float
    a: float
    offset: float = 0.0
    supports_complex = True

    @classmethod
    def from_spectroscopic(cls, de_cm1: float, we_cm1: float, re: float, mass: float,
                           offset: float = 0.0) -> "Morse":
        de = float(UNITS.cm1_to_hartree(de_cm1))
        we = float(UNITS.cm1_to_hartree(we_cm1))
        return cls(de=de, re=re, a=we * np.sqrt(mass / (2.0 * de)), offset=offset)

    def __call__(self, r):
        return self.de * (1.0 - np.exp(-self.a * (r - self.re))) ** 2 - self.de + self.offset

    @property
    def asymptote(self) -> float:
        return self.offset

    def harmonic_frequency(self, mass: float) -> float:
        return self.a * np.sqrt(2.0 * self.de / mass)

    def n_bound(self, mass: float) -> int:
        lam = np.sqrt(2.0 * mass * self.de) / self.a
        return int(np.floor(lam - 0.5)) + 1

    def levels(self, mass: float, v_max: int) -> np.ndarray:
        """Closed-form Morse eigenvalues for v = 0..v_max."""
        we = self.harmonic_frequency(mass)
        x = np.arange(v_max + 1) + 0.5
        return we * x - (we * x) ** 2 / (4.0 * self.de) - self.de + self.offset


@dataclass(frozen=True)
class ExponentialRepulsive:
    """V(R) = asymptote + amplitude*exp(-beta (R - r_ref))."""

    amplitude: float
    beta: float
    r_ref: float
    asymptote: float = 0.0
    supports_complex = True

    def __call__(self, r):
        return self.asymptote + self.amplitude * np.exp(-self.beta * (r - self.r_ref))


@dataclass(frozen=True)
class Harmonic:
    """V(R) = k/2 (R - r0)^2 + offset.  Testing aid; has no asymptote."""

    k: float
    r0: float
    offset: float = 0.0
    supports_complex = True

    def __call__(self, r):
        return 0.5 * self.k * (r - self.r0) ** 2 + self.offset

    @property
    def asymptote(self) -> float:
        return np.inf


@dataclass(frozen=True)
class Linear:
    """V(R) = offset + slope*(R - r0).  Testing aid for crossing models."""

    slope: float
    r0: float = 0.0
    offset: float = 0.0
    supports_complex = True

    def __call__(self, r):
        return self.offset + self.slope * (r - self.r0)


class TabulatedPotential:
    """Local cubic (Akima) interpolation of a (R, V) table.

    Outside the tabulated range the value is clamped to the end values, so
    the last tabulated value plays the role of the asymptote.  Complex R is
    only accepted where the curve is clamped (beyond the table), since the
    interpolant has no analytic continuation.
    """

    supports_complex = False

    def __init__(self, r, v):
        r = np.asarray(r, dtype=float)
        v = np.asarray(v, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 4:
            raise ModelError("potential table needs two equal columns with >= 4 rows")
        order = np.argsort(r)
        r, v = r[order], v[order]
        if np.any(np.diff(r) <= 0):
            raise ModelError("potential table has repeated R values")
        self.r_table = r
        self.v_table = v
        self._spline = Akima1DInterpolator(r, v)

    @classmethod
    def from_file(cls, path) -> "TabulatedPotential":
        data = np.loadtxt(path, comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise ModelError(f"{path}: expected two columns (R bohr, V hartree)")
        return cls(data[:, 0], data[:, 1])

    @property
    def asymptote(self) -> float:
        return float(self.v_table[-1])

    def __call__(self, r):
        r = np.asarray(r)
        if np.iscomplexobj(r):
            im = np.abs(r.imag) > 0
            if np.any(im & (r.real < self.r_table[-1])):
                raise ModelError("tabulated potential evaluated at complex R inside its table")
            out = self._eval(r.real).astype(complex)
            return out
        return self._eval(r)

    def _eval(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.r_table[0], self.r_table[-1])
        out = self._spline(xc)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class LinearDipole:
    """mu(R) = mu0 + slope*(R - r_ref); constant when slope = 0."""

    mu0: float
    slope: float = 0.0
    r_ref: float = 0.0
    supports_complex = True

    def __call__(self, r):
        r = np.asarray(r)
        return self.mu0 + self.slope * (r - self.r_ref) + 0.0 * r


# --------------------------------------------------------------------------
# model
# --------------------------------------------------------------------------
def _asymptote(pot, r_end: float) -> float:
    a = getattr(pot, "asymptote", None)
    return float(pot(r_end)) if a is None else float(a)


@dataclass(frozen=True)
class MolecularModel:
    """Two diabatic curves, their transition dipole, reduced mass and grid."""

    reduced_mass: float
    v1: Callable
    v2: Callable
    mu12: Callable
    grid: RadialGrid
    open_tolerance: float = 1e-6
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        r = self.grid.r
        if not self.reduced_mass > 0:
            raise ModelError("reduced mass must be positive")
        v1 = np.asarray(self.v1(r), dtype=float)
        if not np.all(np.isfinite(v1)):
            raise ModelError("V1 is not finite on the grid")
        if not v1.min() < _asymptote(self.v1, r[-1]):
            raise ModelError("V1 has no well below its asymptote")
        v2 = np.asarray(self.v2(r), dtype=float)
        if not np.all(np.isfinite(v2)):
            raise ModelError("V2 is not finite on the grid")
        # largest rise after a dip; an open curve never rises going outward
        rise = np.max(np.maximum.accumulate(v2[::-1])[::-1] - v2)
        if rise > self.open_tolerance:
            raise ModelError(f"V2 is not open: well of depth {rise:.3e} hartree")
        mu = np.asarray(self.mu12(r[1:-1]), dtype=float)
        if not (np.all(np.isfinite(mu)) and np.all(mu > 0)):
            raise ModelError("mu12 must be finite and positive on the grid interior")

    # convenient sampled views
    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def with_grid(self, grid: RadialGrid) -> "MolecularModel":
        return MolecularModel(self.reduced_mass, self.v1, self.v2, self.mu12, grid,
                              self.open_tolerance, dict(self.meta))

    def is_analytic(self) -> bool:
        return all(getattr(p, "supports_complex", False) for p in (self.v1, self.v2, self.mu12))


@dataclass(frozen=True)
class DressedDiabatic:
    u1: np.ndarray  # V1 + omega on the grid
    u2: np.ndarray  # V2 on the grid
    r0: float       # crossing point


def crossing_function(model: MolecularModel, f: FieldPoint) -> Callable:
    w = f.omega
    return lambda r: model.v1(r) + w - model.v2(r)


def find_crossing(model: MolecularModel, f: FieldPoint, xtol: float = 1e-12) -> float:
    """Unique crossing of V1 + omega and V2 on the grid interior."""
    r = model.r
    g = crossing_function(model, f)
    s = np.sign(g(r))
    nz = s[s != 0]
    flips = int(np.count_nonzero(nz[1:] != nz[:-1]))
    if flips == 0:
        raise NoCrossing(f"V1+hw and V2 do not cross on the grid at {f.wavelength} nm")
    if flips > 1:
        raise MultipleCrossings(f"{flips} crossings of V1+hw and V2 at {f.wavelength} nm")
    idx = np.flatnonzero(s != 0)
    k = np.flatnonzero(s[idx][1:] != s[idx][:-1])[0]
    lo, hi = r[idx[k]], r[idx[k + 1]]
    if g(lo) == 0.0:
        return float(lo)
    return float(bisect(g, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500))


def dressed_diabatic(model: MolecularModel, f: FieldPoint) -> DressedDiabatic:
    r = model.r
    return DressedDiabatic(model.v1(r) + f.omega, np.asarray(model.v2(r), dtype=float),
                           find_crossing(model, f))


def adiabatic_curves(model: MolecularModel, f: FieldPoint, r=None):
    """Return (V+, V-) evaluated at r (default: the model grid)."""
    r = model.r if r is None else np.asarray(r, dtype=float)
    u1 = model.v1(r) + f.omega
    u2 = model.v2(r)
    mean = 0.5 * (u1 + u2)
    half_gap = 0.5 * np.hypot(u1 - u2, model.mu12(r) * f.amplitude)
    return mean + half_gap, mean - half_gap


def dressed_adiabatic(model: MolecularModel, f: FieldPoint):
    return adiabatic_curves(model, f)


# --------------------------------------------------------------------------
# default stand-in
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class StandInParameters:
    """Parameters of the analytic stand-in model (lab units where noted).

    V1 is a Morse curve; V2 = asymptote + k0*exp(-beta(R - r_cross)) with the
    asymptote chosen so V1 + hbar*omega(ref_wavelength) crosses V2 exactly
    at r_cross.
    """

    mass: float = 20963.2195
    de_cm1: float = 200.0
    we_cm1: float = 24.0
    re: float = 9.8
    beta: float = 0.35
    k0: float = 3.0e-3
    r_cross: float = 13.5
    ref_wavelength: float = 576.0
    mu0: float = 5.0
    mu_slope: float = 0.0
    r_min: float = 5.0
    r_max: float = 55.0
    n_points: int = 1024


def stand_in_model(params: StandInParameters | None = None, grid: RadialGrid | None = None
                   ) -> MolecularModel:
    p = params or StandInParameters()
    v1 = Morse.from_spectroscopic(p.de_cm1, p.we_cm1, p.re, p.mass)
    w_ref = float(UNITS.nm_to_omega(p.ref_wavelength))
    v2 = ExponentialRepulsive(p.k0, p.beta, p.r_cross, float(v1(p.r_cross)) + w_ref - p.k0)
    mu = LinearDipole(p.mu0, p.mu_slope, p.re)
    grid = grid or RadialGrid(p.r_min, p.r_max, p.n_points)
    return MolecularModel(p.mass, v1, v2, mu, grid, meta={"stand_in": p})
