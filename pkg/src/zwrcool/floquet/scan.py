"""Resonance continuation and (I, lambda) width scans."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError
from ..model import FieldPoint, MolecularModel
from ..spectrum import BoundState, bound_spectrum
from .globalsolver import solve_global
from .operator import FloquetOperator
from .resonance import Method, Resonance, SolverSettings
from .shooting import solve_grid_shooting


def _overlap(a: Resonance, b: Resonance, n_inner: int) -> float:
    x, y = a.phi1[:n_inner], b.phi1[:n_inner]
    den = np.linalg.norm(x) * np.linalg.norm(y)
    return float(abs(np.vdot(x, y)) / den) if den > 0 else 0.0


class ResonanceTracker:
    """Solves resonances of one model and keeps roots continuous.

    Each solve is warm-started from the previous resonance when given.  If
    the warm start fails or its channel-1 function overlaps poorly with the
    previous one, a cold start from the bound state is tried as well and the
    candidate with the larger overlap wins; ties go to the smaller |dE|.
    """

    overlap_min = 0.9

    def __init__(self, model: MolecularModel, basis: list[BoundState] | None = None,
                 method: Method | str = Method.GLOBAL_WAVE_OPERATOR,
                 settings: SolverSettings | None = None):
        self.model = model
        self.method = Method(method)
        self.settings = settings or SolverSettings()
        self.basis = basis
        self._op = None
        self.n_inner = int(self.settings.absorber_start * model.grid.n_points)

    def bound(self, v: int) -> BoundState:
        if self.basis is None or len(self.basis) <= v:
            self.basis = bound_spectrum(self.model, max(v, 12 if self.basis is None else len(self.basis)))
        return self.basis[v]

    def _solve_once(self, f: FieldPoint, v: int, previous: Resonance | None) -> Resonance:
        if previous is None:
            b = self.bound(v)
            guess = b.energy + f.omega
            seed = b
        else:
            guess = previous.energy + (f.omega - previous.field.omega)
            seed = previous
        if self.method is Method.GLOBAL_WAVE_OPERATOR:
            if self._op is None:
                self._op = FloquetOperator(self.model, self.settings)
            return solve_global(self.model, f, seed=seed, guess=guess, settings=self.settings,
                                operator=self._op)
        return solve_grid_shooting(self.model, f, guess, v, self.settings)

    def solve(self, f: FieldPoint, v: int, previous: Resonance | None = None) -> Resonance:
        if previous is None:
            return self._solve_once(f, v, None)
        try:
            warm = self._solve_once(f, v, previous)
        except ConvergenceError:
            warm = None
        if warm is not None and _overlap(warm, previous, self.n_inner) >= self.overlap_min:
            return warm
        cold = self._solve_once(f, v, None)
        if warm is None:
            return cold
        ow, oc = _overlap(warm, previous, self.n_inner), _overlap(cold, previous, self.n_inner)
        if abs(ow - oc) > 1e-6:
            return warm if ow > oc else cold
        ew, ec = abs(warm.energy - previous.energy), abs(cold.energy - previous.energy)
        return warm if ew <= ec else cold


@dataclass
class WidthSurface:
    """Gamma(I, lambda) scan; NaN marks cells whose solve failed."""

    intensities: np.ndarray
    wavelengths: np.ndarray
    origin_v: int
    energy: np.ndarray  # complex (nI, nL)
    converged: np.ndarray  # bool (nI, nL)
    method: Method
    errors: dict = field(default_factory=dict)
    cross_checks: list = field(default_factory=list)  # (i, j, |dReE|, rel dGamma)

    @property
    def gamma(self) -> np.ndarray:
        return -2.0 * self.energy.imag


def _scan_row(model, basis, intensity, wavelengths, v, method, settings, cross_every, row):
    tracker = ResonanceTracker(model, basis, method, settings)
    other = ResonanceTracker(model, basis, Method.GRID_SHOOTING if tracker.method is
                             Method.GLOBAL_WAVE_OPERATOR else Method.GLOBAL_WAVE_OPERATOR, settings)
    out = np.full(len(wavelengths), np.nan + 1j * np.nan)
    ok = np.zeros(len(wavelengths), bool)
    errs, checks = {}, []
    prev = None
    for j, lam in enumerate(wavelengths):
        f = FieldPoint(float(intensity), float(lam))
        try:
            res = tracker.solve(f, v, prev)
        except ConvergenceError as exc:
            errs[(row, j)] = f"{type(exc).__name__}: {exc}"
            prev = None
            continue
        out[j], ok[j], prev = res.energy, res.converged, res
        flat = row * len(wavelengths) + j
        if cross_every and flat % cross_every == 0:
            try:
                alt = other.solve(f, v, None)
                dre = abs(alt.energy.real - res.energy.real)
                drel = abs(alt.width - res.width) / max(abs(res.width), 1e-300)
                checks.append((row, j, dre, drel))
            except ConvergenceError as exc:
                errs[(row, j, "cross")] = str(exc)
    return row, out, ok, errs, checks


def width_surface(model: MolecularModel, intensities, wavelengths, origin_v: int,
                  method: Method | str = Method.GLOBAL_WAVE_OPERATOR,
                  settings: SolverSettings | None = None, workers: int = 1,
                  basis: list[BoundState] | None = None, cross_every: int = 0) -> WidthSurface:
    """Scan Gamma over the grid, continuing along lambda within each intensity row.

    Failed cells are recorded in ``errors`` and left as NaN; the scan goes on.
    With ``cross_every`` = k, every k-th cell is re-solved by the other method.
    """
    intensities = np.asarray(intensities, float)
    wavelengths = np.asarray(wavelengths, float)
    if np.any(np.diff(intensities) < 0) or np.any(np.diff(wavelengths) < 0):
        raise ValueError("scan grids must be sorted ascending")
    settings = settings or SolverSettings()
    basis = basis or bound_spectrum(model, max(origin_v, 12))
    method = Method(method)
    args = [(model, basis, I, wavelengths, origin_v, method, settings, cross_every, i)
            for i, I in enumerate(intensities)]
    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_scan_row, *zip(*args)))
    else:
        results = [_scan_row(*a) for a in args]
    results.sort(key=lambda r: r[0])
    surf = WidthSurface(intensities, wavelengths, origin_v,
                        np.array([r[1] for r in results]).reshape(len(intensities), len(wavelengths)),
                        np.array([r[2] for r in results]).reshape(len(intensities), len(wavelengths)),
                        method)
    for r in results:
        surf.errors.update(r[3])
        surf.cross_checks.extend(r[4])
    return surf
