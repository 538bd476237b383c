"""Resonance record and solver settings shared by both Floquet methods."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..model import FieldPoint

NOISE_FLOOR = 1e-12  # hartree; widths below this are reported as "<= floor"


class Method(str, enum.Enum):
    GRID_SHOOTING = "grid"
    GLOBAL_WAVE_OPERATOR = "global"


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs for both Floquet solvers.

    Absorber (global method): cubic ramp -i*eta*((R - R_abs)/W)^3 starting at
    ``absorber_start`` (fraction of the grid extent) and reaching eta at the
    right edge.  Complex scaling (grid method): exterior scaling
    z = R_s + (R - R_s) exp(i*theta) beyond ``scaling_start``.
    """

    n_blocks: int = 2
    fd_order: int = 8
    absorber_start: float = 0.8
    absorber_strength: float = 1e-3
    absorber_power: int = 3
    scaling_angle: float = 0.3
    scaling_start: float = 0.8
    substeps: int = 4
    tol: float = 1e-10
    residual_tol: float = 1e-9
    max_iter: int = 40

    def replace(self, **kw) -> "SolverSettings":
        d = dict(self.__dict__)
        d.update(kw)
        return SolverSettings(**d)


@dataclass
class Resonance:
    """One complex quasienergy E = Re E - i*Gamma/2 with its channel functions.

    ``phi1``/``phi2`` are the channel-1 (one-photon block) and channel-2
    (zero-photon block) components on the model grid, normalized with the
    unconjugated product sum(phi1^2 + phi2^2) dR = 1 over all blocks.
    """

    origin_v: int
    energy: complex
    field: FieldPoint
    phi1: np.ndarray
    phi2: np.ndarray
    method: Method
    converged: bool
    residual: float
    iterations: int = 0
    vector: np.ndarray | None = field(default=None, repr=False)
    blocks: tuple = ()

    @property
    def width(self) -> float:
        return -2.0 * float(np.imag(self.energy))

    @property
    def width_floored(self) -> float:
        return max(self.width, NOISE_FLOOR)

    @property
    def below_floor(self) -> bool:
        return self.width < NOISE_FLOOR
