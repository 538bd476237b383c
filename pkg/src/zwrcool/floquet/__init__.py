"""Floquet resonance solvers (grid shooting and global wave-operator) and scans."""
from .globalsolver import dense_eigenpairs, solve_global
from .operator import FloquetOperator, photon_blocks
from .resonance import NOISE_FLOOR, Method, Resonance, SolverSettings
from .scan import ResonanceTracker, WidthSurface, width_surface
from .shooting import solve_grid_shooting

__all__ = [
    "FloquetOperator", "Method", "NOISE_FLOOR", "Resonance", "ResonanceTracker", "SolverSettings",
    "WidthSurface", "dense_eigenpairs", "photon_blocks", "solve_global", "solve_grid_shooting",
    "width_surface",
]
