"""Control pulses built from a fitted ZWR path.

The intensity follows a triangular ramp (zero at both ends, peak at T/2);
the wavelength follows the path law lambda(t) = a I(t) / 1e8 + b, so the
effective frequency is w(t) = 2 pi c / lambda(t).  Two carriers:

* adiabatic: theta(t) = int_0^t w(t') dt'
* naive:     theta(t) = w(t) t   (or w_fixed t with carrier="fixed")

Because lambda(t) is piecewise linear in t, the adiabatic phase has the
closed form (K/s) log(lambda(t)/lambda(0)) on each half, K = 2 pi c.  The
field is always evaluated from these closed forms; the dense samples are
kept for export and diagnostics.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import PathFitMissing
from .pathfinder import INTENSITY_UNIT, PathFit, ZwrPath
from .units import UNITS

MIN_POINTS_PER_CYCLE = 40


class PulseKind(str, enum.Enum):
    ADIABATIC = "adiabatic"
    NAIVE = "naive"


@dataclass(frozen=True)
class RampEnvelope:
    """Triangular intensity profile; times in atomic units."""

    i_max: float  # W/cm^2
    t_total: float  # a.u.

    def __post_init__(self):
        if not (self.i_max > 0 and self.t_total > 0):
            raise ValueError("ramp needs i_max > 0 and t_total > 0")

    @property
    def t_half(self) -> float:
        return 0.5 * self.t_total

    def __call__(self, t):
        t = np.asarray(t, float)
        x = np.where(t <= self.t_half, t, self.t_total - t) / self.t_half
        return self.i_max * np.clip(x, 0.0, 1.0)


def ramp_envelope(i_max: float, t_total_ps: float) -> RampEnvelope:
    return RampEnvelope(i_max, UNITS.ps_to_au(t_total_ps))


@dataclass
class PulseProgram:
    kind: PulseKind
    envelope_law: RampEnvelope
    fit: PathFit
    dt: float  # a.u.
    carrier: str = "path"  # naive only: "path" uses w(t) t, "fixed" uses w(lambda_fixed) t
    fixed_wavelength: float | None = None
    source: dict = field(default_factory=dict)

    # -------- closed forms ----------------------------------------------
    @property
    def total_duration(self) -> float:
        """ps"""
        return UNITS.au_to_ps(self.envelope_law.t_total)

    @property
    def _k(self) -> float:
        return 2.0 * np.pi * UNITS.c_au * UNITS.bohr_nm

    @property
    def _slope(self) -> float:
        """d lambda / dt on the rising half, nm per a.u."""
        env = self.envelope_law
        return self.fit.a * env.i_max / INTENSITY_UNIT / env.t_half

    def intensity(self, t):
        return self.envelope_law(t)

    def wavelength(self, t):
        return self.fit.wavelength(self.envelope_law(t))

    def omega_eff(self, t):
        return self._k / self.wavelength(t)

    def _adiabatic_phase(self, t):
        t = np.asarray(t, float)
        b, s, th = self.fit.b, self._slope, self.envelope_law.t_half
        if s == 0.0:
            return self._k * t / b
        rise = lambda x: (self._k / s) * np.log1p(s * x / b)
        lam_peak = b + s * th
        fall = lambda x: rise(th) - (self._k / s) * np.log1p(-s * (x - th) / lam_peak)
        return np.where(t <= th, rise(np.minimum(t, th)), fall(np.maximum(t, th)))

    def phase(self, t):
        t = np.asarray(t, float)
        if self.kind is PulseKind.ADIABATIC:
            return self._adiabatic_phase(t)
        if self.carrier == "fixed":
            lam = self.fixed_wavelength or float(self.fit.wavelength(self.envelope_law.i_max))
            return self._k / lam * t
        return self.omega_eff(t) * t

    def instantaneous_frequency(self, t):
        """Analytic d theta / dt (one-sided at the apex for the naive pulse)."""
        t = np.asarray(t, float)
        w = self.omega_eff(t)
        if self.kind is PulseKind.ADIABATIC:
            return w
        if self.carrier == "fixed":
            lam = self.fixed_wavelength or float(self.fit.wavelength(self.envelope_law.i_max))
            return np.full_like(t, self._k / lam)
        sign = np.where(t <= self.envelope_law.t_half, 1.0, -1.0)
        dlam = sign * self._slope
        return w - t * self._k * dlam / self.wavelength(t) ** 2

    def amplitude(self, t):
        return UNITS.intensity_to_amplitude(self.envelope_law(t))

    def field(self, t):
        return self.amplitude(t) * np.cos(self.phase(t))

    # -------- samples ----------------------------------------------------
    @property
    def times(self) -> np.ndarray:
        # even number of intervals puts the ramp apex on a sample
        n = 2 * max(1, int(round(0.5 * self.envelope_law.t_total / self.dt)))
        return np.linspace(0.0, self.envelope_law.t_total, n + 1)

    @property
    def envelope(self) -> np.ndarray:
        return self.amplitude(self.times)

    @property
    def sampled_phase(self) -> np.ndarray:
        """Cumulative-trapezoid phase for the adiabatic kind, closed form otherwise."""
        t = self.times
        if self.kind is PulseKind.ADIABATIC:
            return cumulative_trapezoid(self.omega_eff(t), t, initial=0.0)
        return self.phase(t)

    def samples(self) -> dict[str, np.ndarray]:
        t = self.times
        return {"t": t, "intensity": self.intensity(t), "envelope": self.amplitude(t),
                "phase": self.phase(t), "field": self.field(t)}

    def points_per_cycle(self) -> float:
        w = max(float(np.max(self.omega_eff(self.times))),
                float(np.max(np.abs(self.instantaneous_frequency(self.times)))))
        return 2.0 * np.pi / w / self.dt

    def header(self) -> dict:
        return {"kind": self.kind.value, "carrier": self.carrier, "t_total_ps": self.total_duration,
                "i_max": self.envelope_law.i_max, "a": self.fit.a, "b": self.fit.b, "dt": self.dt,
                "fixed_wavelength": self.fixed_wavelength, **self.source}


def default_step(fit: PathFit, i_max: float, points_per_cycle: int = 64) -> float:
    lam_min = float(min(fit.wavelength(0.0), fit.wavelength(i_max)))
    w_max = 2.0 * np.pi * UNITS.c_au * UNITS.bohr_nm / lam_min
    return 2.0 * np.pi / w_max / points_per_cycle


def synthesize(path: ZwrPath | PathFit, t_total_ps: float, kind: PulseKind | str = PulseKind.ADIABATIC,
               dt: float | None = None, i_max: float | None = None, carrier: str = "path",
               fixed_wavelength: float | None = None) -> PulseProgram:
    """Pulse following ``path``; the peak intensity defaults to the path's highest rung."""
    kind = PulseKind(kind)
    if carrier not in ("path", "fixed"):
        raise ValueError(f"unknown carrier mode {carrier!r}")
    if isinstance(path, ZwrPath):
        fit = path.require_fit()
        i_max = i_max or path.max_intensity
        source = {"origin_v": path.origin_v, "v_plus": path.v_plus}
    elif isinstance(path, PathFit):
        fit, source = path, {}
        if i_max is None:
            raise ValueError("i_max is required when synthesizing from a bare fit")
    else:
        raise PathFitMissing("synthesize needs a fitted ZwrPath or a PathFit")
    dt = dt or default_step(fit, i_max)
    p = PulseProgram(kind, ramp_envelope(i_max, t_total_ps), fit, dt, carrier, fixed_wavelength, source)
    if p.points_per_cycle() < MIN_POINTS_PER_CYCLE:
        raise ValueError(f"dt={dt} resolves the optical period by only {p.points_per_cycle():.1f} points")
    return p


def power_spectrum(p: PulseProgram, window: str = "none") -> tuple[np.ndarray, np.ndarray]:
    """(angular frequency in a.u., |FFT|^2) of the sampled field, rectangular window by default."""
    t = p.times
    x = p.field(t)
    if window == "hann":
        x = x * np.hanning(len(x))
    elif window != "none":
        raise ValueError(f"unknown window {window!r}")
    spec = np.abs(np.fft.rfft(x)) ** 2
    freq = 2.0 * np.pi * np.fft.rfftfreq(len(x), d=p.dt)
    return freq, spec


def spectral_width(freq: np.ndarray, spec: np.ndarray, level_db: float = -20.0) -> float:
    """Extent of the frequency support above ``level_db`` relative to the peak."""
    if spec.max() <= 0:
        return 0.0
    keep = freq[spec >= spec.max() * 10.0 ** (level_db / 10.0)]
    return float(keep.max() - keep.min())


def frequency_shift(p: PulseProgram, t=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, (w_eff - w0)/w0, (w* - w0)/w0) with w*(t) = (1/t) int_0^t w_eff."""
    t = p.times if t is None else np.asarray(t, float)
    w = p.omega_eff(t)
    w0 = float(p.omega_eff(0.0))
    theta = p._adiabatic_phase(t)
    with np.errstate(invalid="ignore", divide="ignore"):
        w_star = np.where(t > 0, theta / np.where(t > 0, t, 1.0), w0)
    return t, (w - w0) / w0, (w_star - w0) / w0
