"""Field-free vibrational states of V1 on the Fourier grid.

The kinetic operator is the periodic Fourier-grid matrix, i.e. exactly the
operator the split-operator propagator applies with FFTs, so the bound
states here are stationary under field-free propagation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .errors import GridMismatch, NotConverged, TooFewBoundStates
from .model import MolecularModel, RadialGrid, _asymptote


@dataclass(frozen=True)
class BoundState:
    """Vibrational level v of V1; wavefunction normalized as sum |psi|^2 dx = 1."""

    v: int
    energy: float
    wavefunction: np.ndarray
    grid: RadialGrid


def fourier_kinetic_matrix(grid: RadialGrid, mass: float) -> np.ndarray:
    n = grid.n_points
    k = 2.0 * np.pi * np.fft.fftfreq(n, grid.spacing)
    t = np.fft.ifft(np.fft.fft(np.eye(n), axis=0) * (k**2 / (2.0 * mass))[:, None], axis=0).real
    return 0.5 * (t + t.T)


def count_nodes(psi: np.ndarray, rel: float = 1e-6) -> int:
    sig = psi[np.abs(psi) > rel * np.abs(psi).max()]
    return int(np.count_nonzero(np.signbit(sig[1:]) != np.signbit(sig[:-1])))


def _solve(model: MolecularModel, grid: RadialGrid, v_max: int):
    h = fourier_kinetic_matrix(grid, model.reduced_mass)
    h[np.diag_indices_from(h)] += model.v1(grid.r)
    return eigh(h, subset_by_index=[0, v_max])


def bound_spectrum(model: MolecularModel, v_max: int, check_convergence: bool = False,
                   tol: float = 1e-8) -> list[BoundState]:
    """Bound states v = 0..v_max of V1.

    With ``check_convergence`` the energies are recomputed on a grid with
    twice the points and NotConverged is raised if any level moves by more
    than ``tol`` hartree.
    """
    grid = model.grid
    if v_max < 0:
        return []
    if v_max >= grid.n_points:
        raise TooFewBoundStates("v_max exceeds grid size")
    e, vec = _solve(model, grid, v_max)
    limit = _asymptote(model.v1, grid.r[-1])
    if e[-1] >= limit:
        nb = int(np.count_nonzero(e < limit))
        raise TooFewBoundStates(f"V1 supports {nb} bound states on this grid, need {v_max + 1}")
    if check_convergence:
        e2, _ = _solve(model, grid.refined(2), v_max)
        err = np.max(np.abs(e2 - e))
        if err > tol:
            raise NotConverged(f"bound energies moved by {err:.2e} hartree under grid doubling")
    vec = vec / np.sqrt(grid.spacing)
    states = []
    for v in range(v_max + 1):
        psi = vec[:, v]
        big = np.flatnonzero(np.abs(psi) > 1e-2 * np.abs(psi).max())[0]
        if psi[big] < 0:
            psi = -psi
        nodes = count_nodes(psi)
        if nodes != v:
            raise NotConverged(f"state {v} has {nodes} nodes; grid too coarse")
        psi.setflags(write=False)
        states.append(BoundState(v, float(e[v]), psi, grid))
    return states


@dataclass(frozen=True)
class Populations:
    populations: dict
    norm: float
    remainder: float  # norm not carried by the listed bound states


def project_populations(phi1: np.ndarray, phi2: np.ndarray | None,
                        basis: list[BoundState], grid: RadialGrid | None = None) -> Populations:
    """Bound-state populations |<v|phi1>|^2 and the continuum remainder."""
    if not basis:
        raise GridMismatch("empty projection basis")
    g = basis[0].grid
    if grid is not None and grid != g:
        raise GridMismatch("state and basis live on different grids")
    phi1 = np.asarray(phi1)
    phi2 = np.zeros_like(phi1) if phi2 is None else np.asarray(phi2)
    if phi1.shape != (g.n_points,) or phi2.shape != phi1.shape:
        raise GridMismatch(f"state has shape {phi1.shape}, grid has {g.n_points} points")
    dx = g.spacing
    chi = np.array([b.wavefunction for b in basis])
    amps = chi @ phi1 * dx
    pops = np.abs(amps) ** 2
    norm = float((np.vdot(phi1, phi1).real + np.vdot(phi2, phi2).real) * dx)
    return Populations({b.v: float(p) for b, p in zip(basis, pops)}, norm, norm - float(pops.sum()))


def spectrum_rows(states: list[BoundState], hartree_cm1: float) -> list[tuple]:
    return [(s.v, s.energy * hartree_cm1) for s in states]
