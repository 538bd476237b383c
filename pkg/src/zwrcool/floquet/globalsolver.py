"""Global method: sparse Floquet matrix with absorber, refined by a
one-dimensional wave-operator (Bloch) iteration.

With a one-dimensional active space spanned by the seed s, the wave operator
maps s onto the target eigenvector Psi under intermediate normalization
s^T Psi = 1, and the effective Hamiltonian is the scalar H_eff = s^T K Psi.
Each iteration solves (K - E) x = Psi_k, renormalizes Psi_{k+1} = x/(s^T x)
and updates E = H_eff.  Products are unconjugated (K is complex symmetric).
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from ..errors import DegenerateActiveSpace, NotConverged
from ..model import FieldPoint, MolecularModel
from ..spectrum import BoundState
from .operator import FloquetOperator
from .resonance import Method, Resonance, SolverSettings


def _seed_vector(op: FloquetOperator, seed) -> tuple[np.ndarray, int]:
    if isinstance(seed, BoundState):
        return op.embed(seed.wavefunction.astype(complex)), seed.v
    if isinstance(seed, Resonance):
        if seed.vector is not None and seed.blocks == tuple(op.blocks):
            return seed.vector.copy(), seed.origin_v
        s = op.embed(seed.phi1, (1, 1)) + op.embed(seed.phi2, (2, 0))
        return s, seed.origin_v
    raise TypeError("seed must be a BoundState or a Resonance")


def _finish(op: FloquetOperator, f: FieldPoint, v: int, e: complex, psi: np.ndarray, res: float,
            it: int, converged: bool) -> Resonance:
    dx = op.model.grid.spacing
    psi = psi / np.sqrt(np.sum(psi * psi) * dx)
    parts = op.split(psi)
    i1 = op.index((1, 1))
    # sign convention: channel-1 amplitude with positive real projection sum
    if np.real(np.sum(parts[i1])) < 0:
        psi = -psi
        parts = op.split(psi)
    return Resonance(v, complex(e), f, parts[i1].copy(), parts[op.index((2, 0))].copy(),
                     Method.GLOBAL_WAVE_OPERATOR, converged, float(res), it, psi,
                     tuple(op.blocks))


def solve_global(model: MolecularModel, f: FieldPoint, n_blocks: int | None = None, seed=None,
                 guess: complex | None = None, settings: SolverSettings | None = None,
                 operator: FloquetOperator | None = None, polish: bool = True) -> Resonance:
    """Refine one Floquet resonance starting from a bound state or a previous resonance.

    The iteration stops once the residual is below ``settings.residual_tol``;
    with ``polish`` it continues until the residual is a further 1e-3 lower,
    because widths near a ZWR are far smaller than the residual tolerance.
    """
    settings = settings or SolverSettings()
    if n_blocks is not None and n_blocks != settings.n_blocks:
        settings = settings.replace(n_blocks=n_blocks)
    if not 2 <= settings.n_blocks <= 8:
        raise ValueError("n_blocks must lie in [2, 8]")
    op = operator if operator is not None and operator.settings == settings else FloquetOperator(model, settings)
    k = op.matrix(f)
    s, v = _seed_vector(op, seed)
    if guess is None:
        if isinstance(seed, BoundState):
            guess = seed.energy + f.omega
        else:
            guess = seed.energy
    e = complex(guess)
    psi = s / (s @ s)
    snorm = np.linalg.norm(s)
    res = np.inf
    for it in range(1, settings.max_iter + 1):
        lu = sla.splu((k - e * _identity(k)).tocsc())
        x = lu.solve(psi)
        ov = s @ x
        if abs(ov) < 1e-6 * snorm * np.linalg.norm(x):
            raise DegenerateActiveSpace(f"seed decoupled from the iterate at {f}")
        psi = x / ov
        kpsi = k @ psi
        e = s @ kpsi  # effective Hamiltonian of the 1-D active space
        res = np.linalg.norm(kpsi - e * psi) / np.linalg.norm(psi)
        if res < settings.residual_tol:
            if polish and res > 1e-3 * settings.residual_tol:
                continue  # one more sweep; Im E converges only quadratically
            return _finish(op, f, v, e, psi, res, it, True)
    raise NotConverged(f"wave-operator iteration stalled at residual {res:.2e} ({f})")


def _identity(k):
    return sp.identity(k.shape[0], dtype=complex, format="csc")


def dense_eigenpairs(model: MolecularModel, f: FieldPoint, settings: SolverSettings | None = None):
    """Full dense eigendecomposition of the Floquet matrix (small grids only)."""
    op = FloquetOperator(model, settings)
    k = op.matrix(f).toarray()
    w, vec = la.eig(k)
    return w, vec, op
