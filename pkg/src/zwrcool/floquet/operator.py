"""Discretized multi-block Floquet operator with a complex absorbing potential.

Photon blocks form the chain ... (2,-2) (1,-1) (2,0) (1,1) (2,2) (1,3) ...
where (c, n) is electronic channel c dressed by n photons.  Neighbours in the
chain are coupled by -E*mu12/2.  The two-block truncation keeps the central
pair (1,1), (2,0); more blocks are added alternately above and below.

Unknowns are interleaved point-major (index i*nb + b), which keeps the
finite-difference operator banded for the sparse LU.
"""
from __future__ import annotations

from math import factorial

import numpy as np
import scipy.sparse as sp

from ..model import FieldPoint, MolecularModel
from .resonance import SolverSettings


def photon_blocks(n_blocks: int) -> list[tuple[int, int]]:
    """Block labels (channel, photon number) for a chain of n_blocks."""
    if n_blocks < 2:
        raise ValueError("need at least the two central blocks")
    order = [1, 0]
    while len(order) < n_blocks:
        if len(order) % 2 == 0:
            order.append(max(order) + 1)
        else:
            order.append(min(order) - 1)
    return [(1 if n % 2 else 2, n) for n in order]


def fd_second_derivative_weights(order: int) -> np.ndarray:
    """Central weights c_0..c_m of d^2/dx^2 with accuracy O(h^order)."""
    if order % 2 or order < 2:
        raise ValueError("finite-difference order must be even and >= 2")
    m = order // 2
    c = np.zeros(m + 1)
    for k in range(1, m + 1):
        c[k] = 2.0 * (-1) ** (k + 1) * factorial(m) ** 2 / (k**2 * factorial(m - k) * factorial(m + k))
    c[0] = -2.0 * c[1:].sum()
    return c


def fd_kinetic(n: int, dx: float, mass: float, order: int) -> sp.csr_matrix:
    c = fd_second_derivative_weights(order)
    m = len(c) - 1
    diags = [np.full(n - abs(k), c[abs(k)]) for k in range(-m, m + 1)]
    lap = sp.diags(diags, list(range(-m, m + 1)), shape=(n, n)) / dx**2
    return (-0.5 / mass) * lap.tocsr()


def absorber(r: np.ndarray, settings: SolverSettings) -> np.ndarray:
    """Imaginary absorbing potential values (negative imaginary)."""
    r0 = r[0] + settings.absorber_start * (r[-1] - r[0])
    width = r[-1] - r0
    x = np.clip((r - r0) / width, 0.0, None)
    return -1j * settings.absorber_strength * x**settings.absorber_power


class FloquetOperator:
    """Builds the complex-symmetric Floquet matrix K(f) for one model."""

    def __init__(self, model: MolecularModel, settings: SolverSettings | None = None):
        self.model = model
        self.settings = settings or SolverSettings()
        self.blocks = photon_blocks(self.settings.n_blocks)
        g = model.grid
        self.r = g.r
        self.n = g.n_points
        self.nb = len(self.blocks)
        self._v = {1: np.asarray(model.v1(self.r), float), 2: np.asarray(model.v2(self.r), float)}
        self._mu = np.asarray(model.mu12(self.r), float)
        self._cap = absorber(self.r, self.settings)
        t = fd_kinetic(self.n, g.spacing, model.reduced_mass, self.settings.fd_order)
        self._t = sp.kron(t, sp.identity(self.nb, format="csr"), format="csr").astype(complex)
        adj = np.zeros((self.nb, self.nb))
        for i, (ci, ni) in enumerate(self.blocks):
            for j, (cj, nj) in enumerate(self.blocks):
                if abs(ni - nj) == 1:
                    adj[i, j] = 1.0
        self._adj = sp.csr_matrix(adj)

    def index(self, block: tuple[int, int]) -> int:
        return self.blocks.index(block)

    def diagonal(self, f: FieldPoint) -> np.ndarray:
        w = f.omega
        d = np.empty((self.n, self.nb), complex)
        for b, (c, nph) in enumerate(self.blocks):
            d[:, b] = self._v[c] + nph * w + self._cap
        return d.ravel()

    def matrix(self, f: FieldPoint) -> sp.csc_matrix:
        k = self._t + sp.diags(self.diagonal(f))
        if f.amplitude > 0:
            k = k + sp.kron(sp.diags(-0.5 * f.amplitude * self._mu), self._adj)
        return k.tocsc()

    def embed(self, phi: np.ndarray, block: tuple[int, int] = (1, 1)) -> np.ndarray:
        v = np.zeros((self.n, self.nb), complex)
        v[:, self.index(block)] = phi
        return v.ravel()

    def split(self, vec: np.ndarray) -> np.ndarray:
        """Vector -> array (nb, n) of block components."""
        return vec.reshape(self.n, self.nb).T
