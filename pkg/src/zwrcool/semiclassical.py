"""Semiclassical ZWR analysis.

Bohr-Sommerfeld actions on the field-dressed adiabatic curves:

* the upper adiabatic curve V+ (a well with V2 as inner wall and V1 + hw as
  outer wall), quantized with phase correction chi:
      int_{R+}^{R_t} k+ dR + chi = (v+ + 1/2) pi
* the two-branch curve W = V- for R <= R0 and V+ beyond (practically the
  dressed V1 at weak coupling):
      int_{R-}^{R0} k- dR + int_{R0}^{R_t} k+ dR = (v~ + 1/2) pi

with k = sqrt(2m(e - V)).  A ZWR is expected where a level of W coincides
with a level of V+.  The semiclassical width of a coincidence is
    Gamma = 2 pi e^{2 pi nu}(e^{2 pi nu} - 1) w_d w+ / [w+ + (e^{2 pi nu} - 1) w_d]^3 (e~ - e+)^2
with the Landau-Zener parameter nu = V12^2 / (vbar |dF|).  V12 is the
off-diagonal element of the dressed 2x2 matrix, mu E / 2, so that the
adiabatic gap at R0 is |mu E| (convention "matrix_element").  The convention
"field" takes V12 = mu E and gives nu four times larger.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect, brentq, minimize_scalar, newton

from .errors import (ClassicallyForbiddenCrossing, EnergyAboveWell, MissingNeighborLevel,
                     NoCoincidence, NoCrossing, NoTurningPoint, NotConverged)
from .model import FieldPoint, MolecularModel, adiabatic_curves, crossing_function, find_crossing
from .units import UNITS

CHI_WEAK = -np.pi / 4
NEAR_ZERO_INTENSITY = 1e4  # W/cm^2, keeps V+- well defined for coincidence guesses
TP_XTOL = 1e-12


# --------------------------------------------------------------------------
# generic one-well actions
# --------------------------------------------------------------------------
@dataclass(frozen=True)
class Well:
    """A potential restricted to one well, sampled on a search grid."""

    pot: Callable
    mass: float
    r: np.ndarray  # sampling grid for bracketing turning points
    split: float | None = None  # point where the curve has a kink or step

    @cached_property
    def _samples(self):
        v = np.asarray(self.pot(self.r), float)
        i = int(np.argmin(v))
        lo, hi = self.r[max(i - 1, 0)], self.r[min(i + 1, len(self.r) - 1)]
        res = minimize_scalar(lambda x: float(self.pot(x)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        rmin, vmin = (float(res.x), float(res.fun)) if res.fun < v[i] else (float(self.r[i]), float(v[i]))
        top = float(min(v[: i + 1].max(), v[i:].max()))
        return v, i, rmin, vmin, top

    def minimum(self) -> tuple[float, float]:
        return self._samples[2], self._samples[3]

    def top(self) -> float:
        return self._samples[4]

    def turning_points(self, energy: float) -> tuple[float, float]:
        v, i, rmin, vmin, top = self._samples
        if energy >= top:
            raise EnergyAboveWell(f"energy {energy:.8f} is above the well top {top:.8f}")
        if energy <= vmin:
            if energy < vmin - 1e-14:
                raise NoTurningPoint(f"energy {energy:.8f} below the well minimum {vmin:.8f}")
            return rmin, rmin
        g = lambda x: float(self.pot(x)) - energy
        jl = np.flatnonzero(v[: i + 1] >= energy)[-1]
        jr = i + np.flatnonzero(v[i:] >= energy)[0]
        # brackets [r_jl, inner] and [inner, r_jr] with the potential below energy inside
        left_in = min(self.r[jl + 1], rmin) if jl < i else rmin
        right_in = max(self.r[jr - 1], rmin) if jr > i else rmin
        left = bisect(g, self.r[jl], left_in, xtol=TP_XTOL) if g(left_in) < 0 else self.r[jl]
        right = bisect(g, right_in, self.r[jr], xtol=TP_XTOL) if g(right_in) < 0 else self.r[jr]
        return float(left), float(right)

    def k(self, x, energy):
        return np.sqrt(2.0 * self.mass * np.maximum(energy - self.pot(x), 0.0))

    def action_between(self, a: float, b: float, energy: float, turn_a: bool, turn_b: bool) -> float:
        """int_a^b k dR; square-root ends removed by R = end -/+ (len) s^2."""
        if b <= a:
            return 0.0
        opts = dict(epsabs=1e-10, epsrel=1e-10, limit=200)
        if turn_a and turn_b:
            c = 0.5 * (a + b)
            return (self.action_between(a, c, energy, True, False)
                    + self.action_between(c, b, energy, False, True))
        if turn_a:
            L = b - a
            f = lambda s: self.k(a + L * s * s, energy) * 2.0 * L * s
        elif turn_b:
            L = b - a
            f = lambda s: self.k(b - L * s * s, energy) * 2.0 * L * s
        else:
            return float(quad(lambda x: self.k(x, energy), a, b, **opts)[0])
        return float(quad(f, 0.0, 1.0, **opts)[0])

    def action(self, energy: float) -> tuple[float, float, float]:
        """(left tp, right tp, action) at the given energy."""
        a, b = self.turning_points(energy)
        if b <= a:
            return a, b, 0.0
        # an end is a sqrt turning point unless it sits on a step of the curve
        turn_a = not (self.split is not None and abs(a - self.split) < 1e-9)
        turn_b = not (self.split is not None and abs(b - self.split) < 1e-9)
        s = self.split
        if s is not None and a < s < b:
            return a, b, (self.action_between(a, s, energy, turn_a, False)
                          + self.action_between(s, b, energy, False, turn_b))
        return a, b, self.action_between(a, b, energy, turn_a, turn_b)

    def level(self, n: int, chi: float = 0.0, xtol: float = 1e-15) -> float:
        """Energy with action + chi = (n + 1/2) pi."""
        _, vmin = self.minimum()
        top = self.top()
        target = (n + 0.5) * np.pi - chi
        hi = top - 1e-12 * max(1.0, abs(top))
        g = lambda e: self.action(e)[2] - target
        if g(hi) < 0:
            raise NotConverged(f"level {n} lies above the well top")
        if g(vmin) > 0:
            raise NotConverged(f"level {n} lies below the well bottom (chi too large)")
        e = brentq(g, vmin, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
        if abs(g(e)) > 1e-6:
            raise NotConverged(f"level {n}: quantization residual {g(e):.2e} rad")
        return float(e)

    def ladder(self, chi: float = 0.0, n_max: int | None = None) -> list[float]:
        top = self.top()
        s_top = self.action(top - 1e-12 * max(1.0, abs(top)))[2]
        n_top = int(np.floor((s_top + chi) / np.pi - 0.5))
        if n_max is not None:
            n_top = min(n_top, n_max)
        return [self.level(n, chi) for n in range(n_top + 1)]


# --------------------------------------------------------------------------
# dressed wells of a model
# --------------------------------------------------------------------------
def _search_grid(model: MolecularModel) -> np.ndarray:
    g = model.grid
    return np.linspace(g.r_min, g.r[-1], 4 * g.n_points)


def upper_well(model: MolecularModel, f: FieldPoint) -> Well:
    r0 = find_crossing(model, f)
    return Well(lambda x: adiabatic_curves(model, f, x)[0], model.reduced_mass, _search_grid(model), r0)


def two_branch_well(model: MolecularModel, f: FieldPoint, mode: str = "two_branch") -> Well:
    """The 'modified diabatic' curve: two-branch (default) or pure V1 + hw."""
    if mode == "diabatic":
        w = f.omega
        return Well(lambda x: model.v1(x) + w, model.reduced_mass, _search_grid(model))
    if mode != "two_branch":
        raise ValueError(f"unknown diabatic mode {mode!r}")
    r0 = find_crossing(model, f)

    def pot(x):
        vp, vm = adiabatic_curves(model, f, x)
        return np.where(np.asarray(x) <= r0, vm, vp)

    return Well(pot, model.reduced_mass, _search_grid(model), r0)


@dataclass(frozen=True)
class PhaseIntegralReport:
    r_minus: float
    r_plus: float
    r_t: float
    r0: float
    action_plus: float   # int_{R+}^{R_t} k+
    action_tilde: float  # int_{R-}^{R0} k- + int_{R0}^{R_t} k+
    residual_plus: float  # action_plus + chi - (v+ + 1/2) pi, nearest integer v+
    residual_tilde: float
    v_plus: int
    v_tilde: int
    chi: float


def _residual(action: float) -> tuple[float, int]:
    n = max(int(np.round(action / np.pi - 0.5)), 0)
    return action - (n + 0.5) * np.pi, n


def phase_integrals(model: MolecularModel, f: FieldPoint, energy: float,
                    chi: float = CHI_WEAK) -> PhaseIntegralReport:
    up = upper_well(model, f)
    tb = two_branch_well(model, f)
    rp, rt, s_plus = up.action(energy)
    rm, rt2, s_tilde = tb.action(energy)
    res_p, n_p = _residual(s_plus + chi)
    res_t, n_t = _residual(s_tilde)
    return PhaseIntegralReport(rm, rp, rt, up.split, s_plus, s_tilde, res_p, res_t, n_p, n_t, chi)


def semiclassical_levels(model: MolecularModel, f: FieldPoint, chi: float = CHI_WEAK,
                         mode: str = "two_branch") -> tuple[list[float], list[float]]:
    """(levels of the modified diabatic curve, levels of V+)."""
    return two_branch_well(model, f, mode).ladder(0.0), upper_well(model, f).ladder(chi)


# --------------------------------------------------------------------------
# Landau-Zener and semiclassical width
# --------------------------------------------------------------------------
COUPLING_CONVENTIONS = {"matrix_element": 0.5, "field": 1.0}


def landau_zener(model: MolecularModel, f: FieldPoint, energy: float, h: float = 1e-4,
                 convention: str = "matrix_element") -> float:
    try:
        scale = COUPLING_CONVENTIONS[convention]
    except KeyError:
        raise ValueError(f"unknown coupling convention {convention!r}") from None
    E = f.amplitude
    if E == 0.0:
        return 0.0
    r0 = find_crossing(model, f)
    w = f.omega
    mean = lambda x: 0.5 * (model.v1(x) + w + model.v2(x))
    ekin = energy - float(mean(r0))
    if ekin <= 0:
        raise ClassicallyForbiddenCrossing(f"energy {energy:.8f} below the crossing {float(mean(r0)):.8f}")
    vbar = np.sqrt(2.0 * ekin / model.reduced_mass)
    diff = lambda x: model.v1(x) + w - model.v2(x)
    dF = float(diff(r0 + h) - diff(r0 - h)) / (2.0 * h)
    mu = float(model.mu12(r0))
    return (scale * mu * E) ** 2 / (vbar * abs(dF))


def eq10_width(nu: float, w_d: float, w_p: float, de: float) -> float:
    x = np.expm1(2.0 * np.pi * nu)
    return float(2.0 * np.pi * np.exp(2.0 * np.pi * nu) * x * w_d * w_p / (w_p + x * w_d) ** 3 * de**2)


@dataclass(frozen=True)
class SemiclassicalWidth:
    nu: float
    omega_d: float
    omega_plus: float
    gamma: float
    energy_tilde: float
    energy_plus: float
    v_plus: int
    gamma_alt: float  # same estimate with the other modified-diabatic choice


def _spacing(levels: list[float], n: int) -> float:
    if len(levels) < 2:
        raise MissingNeighborLevel("need two levels for a local spacing")
    if 0 < n < len(levels) - 1:
        return 0.5 * (levels[n + 1] - levels[n - 1])
    return levels[1] - levels[0] if n == 0 else levels[n] - levels[n - 1]


def _width_with(model, f, origin_v, chi, mode, plus_levels, convention="matrix_element"):
    tilde = two_branch_well(model, f, mode).ladder(0.0, n_max=origin_v + 1)
    if len(tilde) <= origin_v:
        raise MissingNeighborLevel(f"modified diabatic curve has no level {origin_v}")
    e_t = tilde[origin_v]
    n_p = int(np.argmin(np.abs(np.asarray(plus_levels) - e_t)))
    w_d = _spacing(tilde, origin_v)
    w_p = _spacing(plus_levels, n_p)
    nu = landau_zener(model, f, e_t, convention=convention)
    return eq10_width(nu, w_d, w_p, e_t - plus_levels[n_p]), nu, w_d, w_p, e_t, n_p


def width_estimate(model: MolecularModel, f: FieldPoint, origin_v: int, chi: float = CHI_WEAK,
                   mode: str = "two_branch", convention: str = "matrix_element") -> SemiclassicalWidth:
    plus = upper_well(model, f).ladder(chi)
    if not plus:
        raise MissingNeighborLevel("V+ supports no level")
    g, nu, w_d, w_p, e_t, n_p = _width_with(model, f, origin_v, chi, mode, plus, convention)
    other = "diabatic" if mode == "two_branch" else "two_branch"
    g_alt = _width_with(model, f, origin_v, chi, other, plus, convention)[0]
    return SemiclassicalWidth(nu, w_d, w_p, g, e_t, plus[n_p], n_p, g_alt)


# --------------------------------------------------------------------------
# coincidence guesses and proximity
# --------------------------------------------------------------------------
def _coincidence_residual(model, v, v_plus, lam, intensity, chi):
    f = FieldPoint(intensity, lam)
    try:
        e_t = two_branch_well(model, f).level(v)
        e_p = upper_well(model, f).level(v_plus, chi)
    except (NotConverged, NoCrossing, EnergyAboveWell, NoTurningPoint):
        return np.nan
    return e_t - e_p


def wavelength_ceiling(model: MolecularModel, v: int, intensity: float = NEAR_ZERO_INTENSITY,
                       bounds: tuple[float, float] = (200.0, 5000.0)) -> float:
    """Wavelength at which R0 reaches the outer turning point of level v of V1.

    Longer wavelengths put the crossing outside the classically allowed
    region of v, which rules out a ZWR originating from v.
    """
    w = two_branch_well(model, FieldPoint(intensity, bounds[0]), "diabatic")
    r_t = w.turning_points(w.level(v))[1]
    gap = lambda lam: float(model.v1(r_t) + float(UNITS.nm_to_omega(lam)) - model.v2(r_t))
    try:
        return float(brentq(gap, *bounds, xtol=1e-10))
    except ValueError as exc:
        raise NoCoincidence("no wavelength ceiling inside the search bounds") from exc


def guess_zwr_wavelengths(model: MolecularModel, origin_v: int, v_plus_max: int,
                          intensity: float = NEAR_ZERO_INTENSITY, window: float = 120.0,
                          step: float = 2.0, chi: float = CHI_WEAK):
    """[(v+, lambda_guess)] for v+ = 0..v_plus_max, and the wavelength ceiling.

    Starting just below the ceiling, lambda is stepped down until the
    residual e~_v - e+_{v+} changes sign for each label; the root is then
    refined by secant iteration in lambda.
    """
    ceiling = wavelength_ceiling(model, origin_v, intensity)
    fun = {}
    out = []
    lam_prev = ceiling - 1e-3
    for vp in range(v_plus_max + 1):
        g = lambda x, vp=vp: _coincidence_residual(model, origin_v, vp, x, intensity, chi)
        a, ga = lam_prev, g(lam_prev)
        found = None
        while a > ceiling - window:
            b = a - step
            gb = g(b)
            if np.isfinite(ga) and np.isfinite(gb) and np.sign(ga) != np.sign(gb):
                found = (b, a, gb, ga)
                break
            a, ga = b, gb
        if found is None:
            raise NoCoincidence(f"no coincidence of v={origin_v} with v+={vp} within "
                                f"{window:.0f} nm below the {ceiling:.2f} nm ceiling")
        b, a, gb, ga = found
        try:
            lam = float(newton(g, a - ga * (a - b) / (ga - gb), x1=a, tol=1e-9, maxiter=50))
            if not b - 1e-6 <= lam <= a + 1e-6:
                raise RuntimeError
        except (RuntimeError, ValueError):
            lam = float(brentq(g, b, a, xtol=1e-9))
        out.append((vp, lam))
        lam_prev = b
    return out, ceiling


def proximity(model: MolecularModel, wavelength: float, v: int, v_plus: int, window: int,
              intensity: float = NEAR_ZERO_INTENSITY, chi: float = CHI_WEAK) -> float:
    """d = (e_v - e_{v+}) / de_w with de_1 = e_v - e_{v-1}, de_2 = e_{v+1} - e_v."""
    if window not in (1, 2):
        raise ValueError("window must be 1 or 2")
    if v - 1 < 0 and window == 1:
        raise MissingNeighborLevel("no level below v = 0")
    if v_plus < 0:
        raise MissingNeighborLevel(f"V+ level {v_plus} does not exist")
    f = FieldPoint(intensity, wavelength)
    tb = two_branch_well(model, f)
    try:
        e_v = tb.level(v)
        e_p = upper_well(model, f).level(v_plus, chi)
        e_w = tb.level(v - 1) if window == 1 else tb.level(v + 1)
    except NotConverged as exc:
        raise MissingNeighborLevel(str(exc)) from exc
    return (e_v - e_p) / abs(e_v - e_w)
