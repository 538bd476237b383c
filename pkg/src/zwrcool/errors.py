"""Exception hierarchy shared by all modules.

Every error carries a short machine-friendly ``code`` so the command line
layer can map failures onto exit codes without string matching.
"""


class ZwrError(Exception):
    """Base class for all package errors."""

    code = "error"


class ConfigError(ZwrError):
    code = "config"


class ModelError(ZwrError):
    code = "model"


class NoCrossing(ModelError):
    code = "no_crossing"


class MultipleCrossings(ModelError):
    code = "multiple_crossings"


class GridMismatch(ZwrError):
    code = "grid_mismatch"


class ConvergenceError(ZwrError):
    """Base for numerical failures (exit code 3 in the CLI)."""

    code = "convergence"


class NotConverged(ConvergenceError):
    code = "not_converged"


class TooFewBoundStates(ConvergenceError):
    code = "too_few_bound_states"


class RootJumped(ConvergenceError):
    code = "root_jumped"


class DegenerateActiveSpace(ConvergenceError):
    code = "degenerate_active_space"


class NoTurningPoint(ConvergenceError):
    code = "no_turning_point"


class EnergyAboveWell(ConvergenceError):
    code = "energy_above_well"


class ClassicallyForbiddenCrossing(ConvergenceError):
    code = "forbidden_crossing"


class NoCoincidence(ConvergenceError):
    code = "no_coincidence"


class MissingNeighborLevel(ConvergenceError):
    code = "missing_neighbor"


class LostMinimum(ConvergenceError):
    code = "lost_minimum"


class PathFitMissing(ZwrError):
    code = "path_fit_missing"


class StepTooLarge(ConvergenceError):
    code = "step_too_large"


class GridTooSmall(ConvergenceError):
    code = "grid_too_small"


class MissingWidthData(ZwrError):
    code = "missing_width_data"


class GaugeJump(ConvergenceError):
    code = "gauge_jump"


class OverlapCollapse(ZwrError):
    code = "overlap_collapse"
