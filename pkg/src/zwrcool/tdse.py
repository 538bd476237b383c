"""Two-channel wavepacket propagation under a control pulse.

    i d/dt (phi1, phi2) = [T + V(t)] (phi1, phi2),
    V(t) = [[V1, -mu E(t)], [-mu E(t), V2]]

with the full carrier E(t) (no rotating-wave approximation).  The building
block is the Strang step: half potential step (analytic 2x2 exponential),
full kinetic step in momentum space, half potential step, with the field
taken from the pulse's closed form at the step midpoint.  By default three
Strang steps are composed into a fourth-order symmetric step; the absorber
is applied as a separate damping factor around each full step.

Diagnostics: bound-state populations of channel 1, the absorbed
(dissociated) norm, the survival estimate exp(-int Gamma dt), and the
effective energy E_eff(t) = <v|H|Phi>/<v|Phi> = e_v - E(t) <v|mu phi2>/<v|phi1>.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numba as nb
import numpy as np
from scipy import fft as sfft
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh

from .errors import (GaugeJump, GridTooSmall, MissingWidthData, OverlapCollapse, StepTooLarge,
                     ZwrError)
from .floquet import ResonanceTracker, SolverSettings
from .model import FieldPoint, MolecularModel, find_crossing
from .pathfinder import PathStateTable, ZwrPath
from .pulse import MIN_POINTS_PER_CYCLE, PulseProgram
from .spectrum import BoundState, bound_spectrum, fourier_kinetic_matrix
from .units import UNITS

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ZeroField:
    """Field-free drive of a given duration (a.u.)."""

    t_total: float
    dt: float

    def field(self, t):
        return np.zeros_like(np.asarray(t, float))

    def omega_eff(self, t):
        return np.full_like(np.asarray(t, float), np.nan)


@dataclass(frozen=True)
class FrozenField:
    """Constant field value E0 (a.u.) for a given duration."""

    value: float
    t_total: float
    dt: float

    def field(self, t):
        return np.full_like(np.asarray(t, float), self.value)

    def omega_eff(self, t):
        return np.full_like(np.asarray(t, float), np.nan)


def _duration(drive) -> float:
    return drive.envelope_law.t_total if isinstance(drive, PulseProgram) else drive.t_total


@dataclass(frozen=True)
class AbsorberSettings:
    """Cubic ramp eta ((R - R_a)/W)^3 on the last ``1 - start`` of the grid."""

    start: float = 0.8
    strength: float = 1e-3
    power: int = 3

    def profile(self, r: np.ndarray) -> np.ndarray:
        r0 = r[0] + self.start * (r[-1] - r[0])
        x = np.clip((r - r0) / (r[-1] - r0), 0.0, None)
        return self.strength * x**self.power

    def start_radius(self, r: np.ndarray) -> float:
        return float(r[0] + self.start * (r[-1] - r[0]))


@dataclass
class TwoChannelState:
    """Channel functions; leading axis runs over ensemble members."""

    phi1: np.ndarray
    phi2: np.ndarray
    time: float
    absorbed: np.ndarray  # cumulative absorbed norm per member

    @property
    def norm(self) -> np.ndarray:
        return np.sum(np.abs(self.phi1) ** 2 + np.abs(self.phi2) ** 2, axis=-1)


@dataclass
class PopulationTrace:
    times: np.ndarray  # a.u.
    levels: list[int]
    populations: np.ndarray  # (n_t, n_levels), ensemble-weighted
    remainder: np.ndarray  # unabsorbed norm not in the listed levels
    dissociated: np.ndarray  # cumulative absorbed norm
    member_populations: np.ndarray  # (n_members, n_t, n_levels)
    weights: np.ndarray

    def population(self, v: int) -> np.ndarray:
        return self.populations[:, self.levels.index(v)]

    def survival(self, v: int) -> np.ndarray:
        """Population of v relative to its initial value."""
        p = self.population(v)
        return p / p[0]

    @property
    def times_ps(self) -> np.ndarray:
        return UNITS.au_to_ps(self.times)


@dataclass
class PropagationRun:
    model: MolecularModel
    drive: object
    dt: float
    final: TwoChannelState
    trace: PopulationTrace
    initial_levels: list[int]
    coherent: bool
    basis: list[BoundState]
    step_times: np.ndarray | None = None  # a.u., where the overlaps below are sampled
    overlaps: dict = field(default_factory=dict)  # v -> (a, b): <v|phi1>, <v|mu phi2> per step
    meta: dict = field(default_factory=dict)


@nb.njit(cache=True)
def _potential_factor(ph, dd, coupling, tau, u11, u12, u22):
    """Pointwise exp(-i tau V) of the 2x2 potential matrix into (u11, u12, u22).

    ``ph`` holds exp(-i tau (V1 + V2)/2); the traceless part is exponentiated
    analytically.
    """
    for j in range(len(dd)):
        c = coupling[j]
        d = dd[j]
        r = np.sqrt(d * d + c * c)
        cs = np.cos(r * tau)
        sn = np.sin(r * tau) / r if r > 0 else tau
        u11[j] = ph[j] * (cs - 1j * sn * d)
        u22[j] = ph[j] * (cs + 1j * sn * d)
        u12[j] = ph[j] * (-1j * sn * c)


@nb.njit(cache=True)
def _apply_factor(psi, u11, u12, u22):
    m, _, n = psi.shape
    for i in range(m):
        for j in range(n):
            a0 = psi[i, 0, j]
            b0 = psi[i, 1, j]
            psi[i, 0, j] = u11[j] * a0 + u12[j] * b0
            psi[i, 1, j] = u12[j] * a0 + u22[j] * b0


@nb.njit(cache=True)
def _damp(psi, damp, first):
    """Multiply by the absorber factor from index ``first`` on; return lost norm per member."""
    m, _, n = psi.shape
    lost = np.zeros(m)
    for j in range(first, n):
        g = damp[j]
        for i in range(m):
            a = psi[i, 0, j]
            b = psi[i, 1, j]
            lost[i] += (abs(a) ** 2 + abs(b) ** 2) * (1.0 - g * g)
            psi[i, 0, j] = a * g
            psi[i, 1, j] = b * g
    return lost


_CBRT2 = 2.0 ** (1.0 / 3.0)
SCHEMES = {
    "strang": (1.0,),
    # symmetric triple jump: fourth order from the symmetric Strang step
    "yoshida4": (1.0 / (2.0 - _CBRT2), -_CBRT2 / (2.0 - _CBRT2), 1.0 / (2.0 - _CBRT2)),
}


class SplitOperator:
    """Split-operator propagator for one model on its grid.

    One step of length dt: absorber half step, then the substeps of the
    scheme (each a Strang step V/2 T V/2 with the field at its midpoint),
    then the other absorber half step.
    """

    def __init__(self, model: MolecularModel, absorber: AbsorberSettings | None = None,
                 scheme: str = "yoshida4"):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}")
        self.model = model
        self.scheme = scheme
        self.weights = SCHEMES[scheme]
        g = model.grid
        self.r = g.r
        self.dx = g.spacing
        self.absorber = absorber
        self.k = 2.0 * np.pi * np.fft.fftfreq(g.n_points, g.spacing)
        v1, v2 = model.v1(self.r), model.v2(self.r)
        self.vbar = 0.5 * (v1 + v2)
        self.dd = 0.5 * (v1 - v2)
        self.mu = np.asarray(model.mu12(self.r), float) * np.ones_like(self.r)
        self.cap = absorber.profile(self.r) if absorber else np.zeros_like(self.r)
        nz = np.flatnonzero(self.cap > 0)
        self._first = int(nz[0]) if len(nz) else g.n_points

    def substep_offsets(self) -> np.ndarray:
        """Midpoints of the substeps as fractions of dt."""
        w = np.asarray(self.weights)
        return np.cumsum(w) - 0.5 * w

    def prepare(self, dt: float):
        tk = self.k**2 / (2.0 * self.model.reduced_mass)
        self._dt = dt
        self._kin = {w: np.exp(-1j * tk * w * dt) for w in set(self.weights)}
        self._ph = {w: np.exp(-0.5j * w * dt * self.vbar) for w in set(self.weights)}
        self._damp = np.exp(-0.5 * self.cap * dt)
        n = len(self.r)
        self._u = (np.empty(n, complex), np.empty(n, complex), np.empty(n, complex))

    def step(self, psi, fields, dt: float) -> np.ndarray:
        """Advance psi in place by the prepared dt; ``fields`` holds the field
        at each substep midpoint.  Returns the absorbed norm per member."""
        u11, u12, u22 = self._u
        lost = _damp(psi, self._damp, self._first)
        for w, e in zip(self.weights, fields):
            _potential_factor(self._ph[w], self.dd, -self.mu * e, 0.5 * w * self._dt, u11, u12, u22)
            _apply_factor(psi, u11, u12, u22)
            psi[:] = sfft.ifft(sfft.fft(psi, axis=-1) * self._kin[w], axis=-1, overwrite_x=True)
            _apply_factor(psi, u11, u12, u22)
        lost += _damp(psi, self._damp, self._first)
        return lost * self.dx


def _levels_for(basis: list[BoundState], initial) -> tuple[list[int], np.ndarray]:
    if isinstance(initial, BoundState):
        return [initial.v], np.array([1.0])
    if isinstance(initial, int):
        return [initial], np.array([1.0])
    if isinstance(initial, dict):
        vs = sorted(initial)
        w = np.array([float(initial[v]) for v in vs])
    else:
        vs = list(initial)
        w = np.ones(len(vs))
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("ensemble weights must be nonnegative and not all zero")
    return vs, w / w.sum()


def check_layout(model: MolecularModel, basis: list[BoundState], levels: list[int],
                 absorber: AbsorberSettings | None, tol: float = 1e-10) -> None:
    """The absorber must lie beyond the crossing region and the initial states."""
    if absorber is None:
        return
    r = model.grid.r
    ra = absorber.start_radius(r)
    inside = r >= ra
    for v in levels:
        leak = float(np.sum(basis[v].wavefunction[inside] ** 2) * model.grid.spacing)
        if leak > tol:
            raise GridTooSmall(f"state {v} has norm {leak:.2e} inside the absorber (R >= {ra:.2f})")
    try:
        r0 = find_crossing(model, FieldPoint(0.0, 576.0))
    except ZwrError:
        return
    if r0 >= ra:
        raise GridTooSmall(f"crossing at {r0:.2f} lies inside the absorber")


def propagate(model: MolecularModel, drive, initial, dt: float | None = None,
              basis: list[BoundState] | None = None, coherent: bool = False,
              record_every: int | None = None, absorber: AbsorberSettings | None = AbsorberSettings(),
              track_overlaps: bool = True, v_max: int | None = None,
              accounting_tol: float = 1e-10, scheme: str = "yoshida4") -> PropagationRun:
    """Propagate ``initial`` (v, BoundState, list of v or {v: weight}) under ``drive``.

    Ensembles are propagated as independent members whose populations are
    summed with the weights (incoherent); ``coherent=True`` propagates the
    normalized superposition sum sqrt(w_v) |v> instead.  Populations are
    recorded every ``record_every`` steps (default: one optical cycle).
    The drive is a PulseProgram, ZeroField or FrozenField.
    """
    t_total = _duration(drive)
    dt = float(dt or drive.dt)
    n_steps = max(1, int(round(t_total / dt)))
    dt = t_total / n_steps
    if isinstance(drive, PulseProgram):
        w_max = float(np.max(np.abs(drive.instantaneous_frequency(drive.times))))
        if 2.0 * np.pi / w_max / dt < MIN_POINTS_PER_CYCLE:
            raise StepTooLarge(f"dt={dt:.3f} a.u. gives fewer than {MIN_POINTS_PER_CYCLE} steps per cycle")
        period = 2.0 * np.pi / w_max
    else:
        period = 2.0 * np.pi / UNITS.nm_to_omega(576.0)
    if record_every is None:
        record_every = max(1, int(round(period / dt)))
    levels, weights = _levels_for(basis or [], initial)
    if basis is None:
        basis = bound_spectrum(model, v_max if v_max is not None else max(max(levels) + 3, 12))
    check_layout(model, basis, levels, absorber)

    n = model.grid.n_points
    if coherent:
        psi = np.zeros((1, 2, n), complex)
        for v, w in zip(levels, weights):
            psi[0, 0] += np.sqrt(w) * basis[v].wavefunction
        member_w = np.array([1.0])
    else:
        psi = np.zeros((len(levels), 2, n), complex)
        for i, v in enumerate(levels):
            psi[i, 0] = basis[v].wavefunction
        member_w = weights
    prop = SplitOperator(model, absorber, scheme)
    prop.prepare(dt)
    dx = prop.dx
    chi = np.array([b.wavefunction for b in basis])
    chi_mu = chi * prop.mu
    absorbed = np.zeros(psi.shape[0])
    norm0 = np.sum(np.abs(psi) ** 2, axis=(1, 2)) * dx

    t_sub = (np.arange(n_steps)[:, None] + prop.substep_offsets()[None, :]) * dt
    fields = np.asarray(drive.field(t_sub), float).reshape(t_sub.shape)
    rec_idx = list(range(0, n_steps + 1, record_every))
    if rec_idx[-1] != n_steps:
        rec_idx.append(n_steps)
    pops = np.empty((psi.shape[0], len(rec_idx), len(basis)))
    rem = np.empty((psi.shape[0], len(rec_idx)))
    diss = np.empty((psi.shape[0], len(rec_idx)))
    tracked = levels if track_overlaps else []
    ov_a = np.empty((len(tracked), n_steps + 1), complex)
    ov_b = np.empty_like(ov_a)
    rows = np.array([basis[v].wavefunction for v in tracked]).reshape(len(tracked), n)
    rows_mu = rows * prop.mu

    def _record(k, step):
        amps = np.einsum("vn,mn->mv", chi, psi[:, 0]) * dx
        p = np.abs(amps) ** 2
        pops[:, k] = p
        nrm = np.sum(np.abs(psi) ** 2, axis=(1, 2)) * dx
        rem[:, k] = nrm - p.sum(axis=1)
        diss[:, k] = absorbed

    def _overlaps(step):
        if not tracked:
            return
        src = psi if not coherent else np.repeat(psi, len(tracked), axis=0)
        idx = np.arange(len(tracked)) if not coherent else np.arange(len(tracked))
        ov_a[:, step] = np.einsum("tn,tn->t", rows, src[idx, 0]) * dx
        ov_b[:, step] = np.einsum("tn,tn->t", rows_mu, src[idx, 1]) * dx

    k = 0
    _record(k, 0)
    _overlaps(0)
    k += 1
    next_rec = rec_idx[k] if k < len(rec_idx) else None
    check_every = max(1, n_steps // 200)
    for s in range(n_steps):
        lost = prop.step(psi, fields[s], dt)
        absorbed += lost
        step = s + 1
        _overlaps(step)
        if step % check_every == 0 or step == n_steps:
            nrm = np.sum(np.abs(psi) ** 2, axis=(1, 2)) * dx
            err = np.max(np.abs(nrm + absorbed - norm0))
            if err > accounting_tol * max(1.0, step / 1000.0):
                raise StepTooLarge(f"norm accounting off by {err:.2e} after {step} steps; reduce dt")
        if step == next_rec:
            _record(k, step)
            k += 1
            next_rec = rec_idx[k] if k < len(rec_idx) else None

    times = np.array(rec_idx, float) * dt
    all_levels = [b.v for b in basis]
    weighted = np.einsum("m,mtv->tv", member_w, pops)
    trace = PopulationTrace(times, all_levels, weighted, member_w @ rem, member_w @ diss, pops, member_w)
    final = TwoChannelState(psi[:, 0].copy(), psi[:, 1].copy(), t_total, absorbed.copy())
    overlaps = {v: (ov_a[i], ov_b[i]) for i, v in enumerate(tracked)}
    step_times = np.arange(n_steps + 1) * dt if tracked else None
    return PropagationRun(model, drive, dt, final, trace, levels, coherent, basis, step_times, overlaps,
                          {"n_steps": n_steps, "record_every": record_every})


# --------------------------------------------------------------------------
# survival estimate from widths along the path
# --------------------------------------------------------------------------
def width_along_pulse(table: PathStateTable, v: int, pulse: PulseProgram, t) -> np.ndarray:
    """Gamma_v(I(t)) interpolated in intensity; zero field gives zero width."""
    if v not in table.energies:
        raise MissingWidthData(f"no widths for v={v} along the path")
    g = table.gamma(v)
    ok = np.isfinite(g)
    if not ok.any():
        raise MissingWidthData(f"all width solves failed for v={v}")
    i_tab = np.concatenate([[0.0], table.intensities[ok]])
    g_tab = np.concatenate([[0.0], np.clip(g[ok], 0.0, None)])
    return np.interp(pulse.intensity(t), i_tab, g_tab)


def adiabatic_survival_estimate(source, pulse: PulseProgram, levels, t=None) -> dict[int, np.ndarray]:
    """P_v(t) = exp(-int_0^t Gamma_v dt').  ``source`` is a PathStateTable or
    a callable (v, t) -> Gamma_v(t)."""
    t = pulse.times if t is None else np.asarray(t, float)
    out = {}
    for v in levels:
        if isinstance(source, PathStateTable):
            g = width_along_pulse(source, v, pulse, t)
        elif callable(source):
            g = np.asarray(source(v, t), float)
        else:
            raise MissingWidthData("need a PathStateTable or a width function")
        out[v] = np.exp(-cumulative_trapezoid(g, t, initial=0.0))
    return out


# --------------------------------------------------------------------------
# effective energy
# --------------------------------------------------------------------------
def rolling_mean(t: np.ndarray, y: np.ndarray, period) -> np.ndarray:
    """Centered running average over a (possibly time-dependent) window."""
    t = np.asarray(t, float)
    period = np.broadcast_to(np.asarray(period, float), t.shape)
    out = np.zeros(len(t), complex)
    for part, scale in ((np.real(y), 1.0), (np.imag(y), 1j)):
        c = cumulative_trapezoid(part, t, initial=0.0)
        lo = np.clip(t - 0.5 * period, t[0], t[-1])
        hi = np.clip(t + 0.5 * period, t[0], t[-1])
        width = np.where(hi > lo, hi - lo, 1.0)
        avg = np.where(hi > lo, (np.interp(hi, t, c) - np.interp(lo, t, c)) / width, part)
        out += scale * avg
    return out


@dataclass
class EffectiveEnergyTrace:
    times: np.ndarray  # a.u.
    energy: np.ndarray  # complex hartree
    rolling: np.ndarray  # complex hartree
    collapsed: np.ndarray  # bool mask, |<v|phi1>| below threshold
    reference: np.ndarray | None = None  # complex hartree, adiabatic reference on the same times
    reference_rolling: np.ndarray | None = None

    @property
    def energy_cm1(self) -> np.ndarray:
        return UNITS.hartree_to_cm1(self.energy)

    @property
    def rolling_cm1(self) -> np.ndarray:
        return UNITS.hartree_to_cm1(self.rolling)

    def max_imag(self, mask=None) -> float:
        x = np.abs(self.rolling.imag)
        return float(np.max(x if mask is None else x[mask]))

    def distance_to_reference(self, mask=None) -> float:
        if self.reference_rolling is None:
            raise MissingWidthData("no adiabatic reference attached")
        d = np.abs(self.rolling - self.reference_rolling)
        return float(np.max(d if mask is None else d[mask]))


def effective_energy(run: PropagationRun, v: int, stride: int = 1, threshold: float = 1e-6,
                     strict: bool = False) -> EffectiveEnergyTrace:
    """E_eff(t) for the member started in v (or the coherent state), with a
    rolling mean over the instantaneous optical period."""
    if v not in run.overlaps:
        raise MissingWidthData(f"no overlaps were tracked for v={v}")
    a, b = run.overlaps[v]
    t = run.step_times
    fields = np.asarray(run.drive.field(t), float)
    small = np.abs(a) < threshold
    if small.any() and strict:
        raise OverlapCollapse(f"|<{v}|phi1>| fell below {threshold} at t={t[np.argmax(small)]:.1f} a.u.")
    safe = np.where(small, 1.0, a)
    e = run.basis[v].energy - fields * b / safe
    e = np.where(small, np.nan + 1j * np.nan, e)
    w = np.asarray(run.drive.omega_eff(t), float)
    period = np.where(np.isfinite(w), 2.0 * np.pi / np.where(np.isfinite(w), w, 1.0),
                      2.0 * np.pi / UNITS.nm_to_omega(576.0))
    filled = np.where(small, run.basis[v].energy, e)
    roll = rolling_mean(t, filled, period)
    sl = slice(None, None, stride)
    return EffectiveEnergyTrace(t[sl], e[sl], roll[sl], small[sl])


@dataclass
class AdiabaticSamples:
    times: np.ndarray  # a.u., rising half and mirrored falling half
    energies: np.ndarray  # complex quasienergies
    coefficients: np.ndarray  # (n_t, n_channel1_blocks) complex, <v|chi_{1,n}>
    photons: np.ndarray  # photon numbers of the channel-1 blocks
    min_overlap: float


def sample_adiabatic_states(model: MolecularModel, pulse: PulseProgram, v: int, n_samples: int = 41,
                            tracker: ResonanceTracker | None = None,
                            settings: SolverSettings | None = None,
                            gauge_min: float = 0.9) -> AdiabaticSamples:
    """Floquet resonances of v at the pulse's (I(t), lambda(t)) on the rising half,
    phase-aligned by maximal overlap between neighbouring samples."""
    tracker = tracker or ResonanceTracker(model, settings=settings)
    half = pulse.envelope_law.t_half
    ts = np.linspace(0.0, half, n_samples)
    basis_v = tracker.bound(v).wavefunction
    dx = model.grid.spacing
    prev, prev_vec = None, None
    energies, coefs, min_ov = [], [], 1.0
    photons = None
    for t in ts:
        f = FieldPoint(float(pulse.intensity(t)), float(pulse.wavelength(t)))
        res = tracker.solve(f, v, prev)
        blocks = list(res.blocks)
        comps = res.vector.reshape(model.grid.n_points, len(blocks)).T
        ch1 = [i for i, (c, _) in enumerate(blocks) if c == 1]
        if photons is None:
            photons = np.array([blocks[i][1] for i in ch1])
        vec = res.vector
        if prev_vec is not None:
            ov = np.vdot(prev_vec, vec)
            mag = abs(ov) / (np.linalg.norm(prev_vec) * np.linalg.norm(vec))
            min_ov = min(min_ov, mag)
            if mag < gauge_min:
                raise GaugeJump(f"overlap {mag:.3f} between adjacent samples at t={t:.1f}; sample finer")
            vec = vec * np.exp(-1j * np.angle(ov))
            comps = vec.reshape(model.grid.n_points, len(blocks)).T
        coefs.append([np.sum(basis_v * comps[i]) * dx for i in ch1])
        energies.append(res.energy)
        prev, prev_vec = res, vec
    energies = np.array(energies)
    coefs = np.array(coefs)
    # mirror: the falling half retraces the same field points
    t_all = np.concatenate([ts, pulse.envelope_law.t_total - ts[-2::-1]])
    return AdiabaticSamples(t_all, np.concatenate([energies, energies[-2::-1]]),
                            np.concatenate([coefs, coefs[-2::-1]]), photons, min_ov)


def adiabatic_reference(samples: AdiabaticSamples, pulse: PulseProgram, t) -> np.ndarray:
    """E_ad(t) = E(t) + i <v|d/dt chi>/<v|chi> with chi(t) = sum_n chi_n e^{i n theta(t)}."""
    t = np.asarray(t, float)
    theta = pulse.phase(t)
    w = pulse.instantaneous_frequency(t)

    def spline(y):
        re, im = CubicSpline(samples.times, y.real), CubicSpline(samples.times, y.imag)
        return re(t) + 1j * im(t), re(t, 1) + 1j * im(t, 1)

    e, _ = spline(samples.energies)
    num = np.zeros(len(t), complex)
    den = np.zeros(len(t), complex)
    for j, n_ph in enumerate(samples.photons):
        c, dc = spline(samples.coefficients[:, j])
        ph = np.exp(1j * n_ph * theta)
        den += c * ph
        num += (dc + 1j * n_ph * w * c) * ph
    return e + 1j * num / den


def attach_reference(trace: EffectiveEnergyTrace, samples: AdiabaticSamples, pulse: PulseProgram) -> None:
    ref = adiabatic_reference(samples, pulse, trace.times)
    trace.reference = ref
    trace.reference_rolling = rolling_mean(trace.times, ref, 2.0 * np.pi / pulse.omega_eff(trace.times))


# --------------------------------------------------------------------------
# dense oracle
# --------------------------------------------------------------------------
def dense_hamiltonian(model: MolecularModel, e_field: float) -> np.ndarray:
    g = model.grid
    t = fourier_kinetic_matrix(g, model.reduced_mass)
    r = g.r
    mu = np.asarray(model.mu12(r), float) * np.ones_like(r)
    n = g.n_points
    h = np.zeros((2 * n, 2 * n))
    h[:n, :n] = t + np.diag(model.v1(r))
    h[n:, n:] = t + np.diag(model.v2(r))
    h[:n, n:] = h[n:, :n] = np.diag(-mu * e_field)
    return h


def _expm_apply(h: np.ndarray, tau: float, psi: np.ndarray) -> np.ndarray:
    """exp(-i tau H) psi for real symmetric H via its eigendecomposition."""
    w, v = eigh(h)
    return v @ (np.exp(-1j * tau * w) * (v.T @ psi))


def expm_propagate(model: MolecularModel, drive, phi1: np.ndarray, phi2: np.ndarray | None = None,
                   step: float = 4.0) -> tuple[np.ndarray, np.ndarray]:
    """Reference propagation with dense matrix exponentials.

    Fourth-order commutator-free Magnus scheme: per step of length h,
    exp(-i h (a2 H(t1) + a1 H(t2))) exp(-i h (a1 H(t1) + a2 H(t2))) applied to
    the state, with Gauss nodes t1, t2 and a1 + a2 = 1/2.  The exponentials of
    the real symmetric matrices are formed from their eigendecompositions.
    No absorber.
    """
    t_total = _duration(drive)
    n_steps = max(1, int(round(t_total / step)))
    h = t_total / n_steps
    n = model.grid.n_points
    psi = np.concatenate([phi1, np.zeros(n) if phi2 is None else phi2]).astype(complex)
    h0 = dense_hamiltonian(model, 0.0)
    r = model.grid.r
    mu = np.asarray(model.mu12(r), float) * np.ones_like(r)
    off = np.zeros((2 * n, 2 * n))
    off[:n, n:] = off[n:, :n] = np.diag(-mu)
    c1, c2 = 0.5 - np.sqrt(3.0) / 6.0, 0.5 + np.sqrt(3.0) / 6.0
    a1, a2 = 0.25 + np.sqrt(3.0) / 6.0, 0.25 - np.sqrt(3.0) / 6.0
    for s in range(n_steps):
        e1 = float(drive.field((s + c1) * h))
        e2 = float(drive.field((s + c2) * h))
        psi = _expm_apply(h0 + (a1 * e1 + a2 * e2) / (a1 + a2) * off, (a1 + a2) * h, psi)
        psi = _expm_apply(h0 + (a2 * e1 + a1 * e2) / (a1 + a2) * off, (a1 + a2) * h, psi)
    return psi[:n], psi[n:]
