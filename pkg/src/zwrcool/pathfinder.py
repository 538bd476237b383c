"""ZWR path tracing in the (lambda, I) plane.

For every rung of an ascending intensity ladder the width Gamma(lambda) of
the resonance born from ``origin_v`` is minimized by golden section, warm
started at the previous rung's optimum.  The traced points are then fitted
by the straight line lambda = a * I / 1e8 + b (a in nm per 1e8 W/cm^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, LostMinimum, PathFitMissing
from .floquet import Method, Resonance, ResonanceTracker, SolverSettings
from .model import FieldPoint, MolecularModel

INTENSITY_UNIT = 1e8  # W/cm^2, unit of the fitted slope
OBJECTIVE_FLOOR = 1e-16  # hartree, below the solvers' reproducible noise
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def default_ladder(i_min: float = 1e5, i_max: float = 1e8, n: int = 40) -> np.ndarray:
    return np.geomspace(i_min, i_max, n)


@dataclass(frozen=True)
class PathFit:
    a: float  # nm per 1e8 W/cm^2
    b: float  # nm
    rms: float  # nm

    def wavelength(self, intensity):
        return self.a * np.asarray(intensity) / INTENSITY_UNIT + self.b


@dataclass
class PathPoint:
    field: FieldPoint
    gamma: float
    resonance: Resonance | None  # None for paths read back from files
    evaluations: int = 0
    re_energy: float = float("nan")

    def __post_init__(self):
        if self.resonance is not None and not np.isfinite(self.re_energy):
            self.re_energy = float(self.resonance.energy.real)


@dataclass
class ZwrPath:
    origin_v: int
    v_plus: int
    points: list[PathPoint]
    fit: PathFit | None = None
    meta: dict = field(default_factory=dict)

    @property
    def intensities(self) -> np.ndarray:
        return np.array([p.field.intensity for p in self.points])

    @property
    def wavelengths(self) -> np.ndarray:
        return np.array([p.field.wavelength for p in self.points])

    @property
    def gammas(self) -> np.ndarray:
        return np.array([p.gamma for p in self.points])

    @property
    def max_intensity(self) -> float:
        return float(self.intensities.max())

    def require_fit(self) -> PathFit:
        if self.fit is None:
            raise PathFitMissing(f"path (v={self.origin_v}, v+={self.v_plus}) carries no fit")
        return self.fit

    def rows(self) -> list[tuple]:
        return [(p.field.intensity, p.field.wavelength, p.gamma, p.re_energy) for p in self.points]


def fit_line(intensities, wavelengths) -> PathFit:
    """Unweighted least squares; a single point gives a = 0, b = lambda."""
    x = np.asarray(intensities, float) / INTENSITY_UNIT
    y = np.asarray(wavelengths, float)
    if len(x) == 0:
        raise PathFitMissing("no points to fit")
    if len(x) == 1:
        return PathFit(0.0, float(y[0]), 0.0)
    a, b = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - (a * x + b)) ** 2)))
    return PathFit(float(a), float(b), rms)


class _Objective:
    """log10 of the floored width at fixed intensity, with warm-started solves."""

    def __init__(self, tracker: ResonanceTracker, v: int, intensity: float, start: Resonance | None,
                 floor: float):
        self.tracker, self.v, self.intensity, self.floor = tracker, v, intensity, floor
        self.cache: dict[float, Resonance] = {}
        self.start = start

    def _nearest(self, lam: float) -> Resonance | None:
        if not self.cache:
            return self.start
        key = min(self.cache, key=lambda x: abs(x - lam))
        return self.cache[key]

    def resonance(self, lam: float) -> Resonance:
        if lam not in self.cache:
            f = FieldPoint(self.intensity, lam)
            self.cache[lam] = self.tracker.solve(f, self.v, self._nearest(lam))
        return self.cache[lam]

    def __call__(self, lam: float) -> float:
        return math.log10(max(self.resonance(lam).width, self.floor))


def golden_minimize(fun, lo: float, hi: float, xtol: float, fstop: float = -math.inf,
                    max_iter: int = 200) -> tuple[float, float]:
    """Golden-section search on [lo, hi]; stops when the bracket is below xtol
    or a value at or below fstop is found.  Returns (x, f(x))."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if min(fc, fd) <= fstop or b - a < xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


def minimize_rung(tracker: ResonanceTracker, v: int, intensity: float, center: float,
                  start: Resonance | None, bracket: float = 0.5, xtol: float = 1e-4,
                  floor: float = OBJECTIVE_FLOOR, coarse: float = 0.0, coarse_step: float = 0.1
                  ) -> PathPoint:
    obj = _Objective(tracker, v, intensity, start, floor)
    if coarse > 0:
        grid = center + np.arange(-coarse, coarse + 0.5 * coarse_step, coarse_step)
        vals = [obj(float(x)) for x in grid]
        center = float(grid[int(np.argmin(vals))])
    lo, hi = center - bracket, center + bracket
    lam, val = golden_minimize(obj, lo, hi, xtol, math.log10(floor))
    edge = 2.0 * xtol
    if (lam - lo < edge or hi - lam < edge) and val > math.log10(floor):
        raise LostMinimum(f"no interior minimum in [{lo:.4f}, {hi:.4f}] nm at I={intensity:.3e}")
    res = obj.resonance(lam)
    return PathPoint(FieldPoint(intensity, lam), res.width, res, len(obj.cache))


def trace_path(model: MolecularModel, origin_v: int, v_plus: int, intensities, seed_wavelength: float,
               method: Method | str = Method.GLOBAL_WAVE_OPERATOR, settings: SolverSettings | None = None,
               tracker: ResonanceTracker | None = None, bracket: float = 0.5, xtol: float = 1e-4,
               floor: float = OBJECTIVE_FLOOR, first_window: float = 1.0,
               stop_on_loss: bool = False) -> ZwrPath:
    """Follow the width minimum of ``origin_v`` up an ascending intensity ladder.

    The first rung scans +-first_window nm around the seed on a 0.1 nm grid
    before the golden-section refinement; later rungs are centered on the
    linear extrapolation of the last two points.  With ``stop_on_loss`` a lost
    minimum ends the path instead of raising.
    """
    ladder = np.asarray(intensities, float)
    if ladder.ndim != 1 or len(ladder) == 0 or np.any(np.diff(ladder) <= 0):
        raise ValueError("intensity ladder must be non-empty and strictly ascending")
    tracker = tracker or ResonanceTracker(model, method=method, settings=settings)
    points: list[PathPoint] = []
    center, prev = float(seed_wavelength), None
    for k, intensity in enumerate(ladder):
        try:
            p = minimize_rung(tracker, origin_v, float(intensity), center, prev, bracket, xtol, floor,
                              coarse=first_window if k == 0 else 0.0)
        except LostMinimum:
            if stop_on_loss and points:
                break
            raise
        except ConvergenceError as exc:
            exc.args = (f"rung {k} (I={intensity:.3e}): {exc}",)
            raise
        points.append(p)
        center, prev = p.field.wavelength, p.resonance
        if len(points) >= 2 and k + 1 < len(ladder):
            # paths are close to straight in I: predict the next center
            (i0, l0), (i1, l1) = [(q.field.intensity, q.field.wavelength) for q in points[-2:]]
            center = l1 + (l1 - l0) / (i1 - i0) * (ladder[k + 1] - i1)
    path = ZwrPath(origin_v, v_plus, points)
    path.fit = fit_line(path.intensities, path.wavelengths)
    return path


@dataclass
class PathStateTable:
    """Resonance energies of several states along the points of one path."""

    intensities: np.ndarray
    wavelengths: np.ndarray
    energies: dict[int, np.ndarray]  # v -> complex array, NaN where the solve failed
    errors: dict = field(default_factory=dict)

    def gamma(self, v: int) -> np.ndarray:
        return -2.0 * self.energies[v].imag

    def min_gamma(self, v: int) -> float:
        return float(np.nanmin(self.gamma(v)))


def evaluate_path_on_states(path: ZwrPath, other_vs, model: MolecularModel | None = None,
                            tracker: ResonanceTracker | None = None,
                            method: Method | str = Method.GLOBAL_WAVE_OPERATOR,
                            settings: SolverSettings | None = None) -> PathStateTable:
    """Continuation of each state in ``other_vs`` along the path points."""
    if tracker is None:
        if model is None:
            raise ValueError("need a model or a tracker")
        tracker = ResonanceTracker(model, method=method, settings=settings)
    energies, errors = {}, {}
    for v in other_vs:
        row = np.full(len(path.points), np.nan + 1j * np.nan)
        prev = None
        for j, p in enumerate(path.points):
            try:
                prev = tracker.solve(p.field, v, prev)
                row[j] = prev.energy
            except ConvergenceError as exc:
                errors[(v, j)] = f"{type(exc).__name__}: {exc}"
                prev = None
        energies[v] = row
    return PathStateTable(path.intensities, path.wavelengths, energies, errors)
