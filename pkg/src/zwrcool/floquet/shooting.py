"""Grid method: two-channel shooting-matching with Fox-Goodwin (Numerov)
ratio propagation under exterior complex scaling.

The coordinate is real up to R_s and z = R_s + (R - R_s) exp(i theta)
beyond, so the bound region is untouched while outgoing waves on the open
channel become decaying.  Both channels are regular at the inner edge and
vanish at the (scaled) outer edge.

For nodes with left/right steps h1, h2 (complex past R_s) the Numerov-type
three-term relation is

    A_n y_{n-1} + B_n y_n + C_n y_{n+1} = 0,
    A = h2 - q a_- W_{n-1},  B = -(h1+h2) - q a_0 W_n,  C = h1 - q a_+ W_{n+1},

with q = h1 h2 (h1+h2)/2, W = 2m(V - E), and weights that reduce to
(1, 10, 1)/12 for equal steps.  Outward and inward ratios are combined into
the matching matrix M = A_m Q_m + B_m + C_m P_m at the outer classical
turning point of the closed channel, and E is found by a complex secant
iteration on det M.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from ..errors import ModelError, NotConverged, RootJumped
from ..model import FieldPoint, MolecularModel
from .resonance import Method, Resonance, SolverSettings


@njit(cache=True)
def _inv2(a):
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    out = np.empty((2, 2), np.complex128)
    out[0, 0] = a[1, 1] / det
    out[1, 1] = a[0, 0] / det
    out[0, 1] = -a[0, 1] / det
    out[1, 0] = -a[1, 0] / det
    return out


@njit(cache=True)
def _coefficients(v11, v22, v12, h1, h2, mass, e, n):
    """A_n, B_n, C_n as (n, 2, 2) arrays for nodes 1..n-2 (others unused)."""
    a = np.zeros((n, 2, 2), np.complex128)
    b = np.zeros((n, 2, 2), np.complex128)
    c = np.zeros((n, 2, 2), np.complex128)
    for k in range(1, n - 1):
        p, r = h1[k], h2[k]
        s = p + r
        q = p * r * s / 2.0
        am = (p * p + p * r - r * r) / (6.0 * p * s)
        ap = (r * r + p * r - p * p) / (6.0 * r * s)
        a0 = 1.0 - am - ap
        for j, wgt, tgt in ((k - 1, am, 0), (k, a0, 1), (k + 1, ap, 2)):
            w11 = 2.0 * mass * (v11[j] - e)
            w22 = 2.0 * mass * (v22[j] - e)
            w12 = 2.0 * mass * v12[j]
            base = p if tgt == 2 else (r if tgt == 0 else -s)
            m = a if tgt == 0 else (b if tgt == 1 else c)
            m[k, 0, 0] = base - q * wgt * w11
            m[k, 1, 1] = base - q * wgt * w22
            m[k, 0, 1] = -q * wgt * w12
            m[k, 1, 0] = -q * wgt * w12
    return a, b, c


@njit(cache=True)
def _ratios(a, b, c, n, m):
    """Outward Q_k = y_{k-1} y_k^-1 (k <= m) and inward P_k = y_{k+1} y_k^-1 (k >= m)."""
    qs = np.zeros((n, 2, 2), np.complex128)
    ps = np.zeros((n, 2, 2), np.complex128)
    for k in range(1, m):
        qs[k + 1] = -(_inv2(a[k] @ qs[k] + b[k]) @ c[k])
    for k in range(n - 2, m, -1):
        ps[k - 1] = -(_inv2(b[k] + c[k] @ ps[k]) @ a[k])
    return qs, ps


@njit(cache=True)
def _matching(v11, v22, v12, h1, h2, mass, e, n, m):
    a, b, c = _coefficients(v11, v22, v12, h1, h2, mass, e, n)
    qs, ps = _ratios(a, b, c, n, m)
    mm = a[m] @ qs[m] + b[m] + c[m] @ ps[m]
    return mm, c[m], qs, ps


@njit(cache=True)
def _reconstruct(qs, ps, ym, n, m):
    y = np.zeros((n, 2), np.complex128)
    y[m] = ym
    for k in range(m, 0, -1):
        y[k - 1] = qs[k] @ y[k]
    for k in range(m, n - 1):
        y[k + 1] = ps[k] @ y[k]
    return y


class ShootingProblem:
    """Pre-tabulated scaled grid and potentials for one (model, field)."""

    def __init__(self, model: MolecularModel, f: FieldPoint, settings: SolverSettings):
        if not model.is_analytic():
            self._check_tabulated(model, settings)
        g = model.grid
        self.sub = settings.substeps
        self.n = g.n_points * self.sub + 1  # fine nodes incl. both edges
        h = g.spacing / self.sub
        x = g.r_min + h * np.arange(self.n)
        rs_idx = int(round(settings.scaling_start * (self.n - 1)))
        self.rs = x[rs_idx]
        rot = np.exp(1j * settings.scaling_angle)
        z = x.astype(complex)
        z[rs_idx:] = self.rs + (x[rs_idx:] - self.rs) * rot
        dz = np.diff(z)
        self.h1 = np.concatenate([[dz[0]], dz])
        self.h2 = np.concatenate([dz, [dz[-1]]])
        self.x, self.z = x, z
        zz = np.where(np.arange(self.n) >= rs_idx, z, x)
        mu = np.asarray(model.mu12(zz), complex)
        self.v11 = np.asarray(model.v1(zz), complex) + f.omega
        self.v22 = np.asarray(model.v2(zz), complex)
        self.v12 = -0.5 * f.amplitude * mu
        self.mass = model.reduced_mass
        self.field = f
        self.model = model
        self.rs_idx = rs_idx

    @staticmethod
    def _check_tabulated(model, settings):
        g = model.grid
        rs = g.r_min + settings.scaling_start * (g.r_max - g.r_min)
        for name in ("v1", "v2", "mu12"):
            pot = getattr(model, name)
            if getattr(pot, "supports_complex", False):
                continue
            tab_end = getattr(pot, "r_table", None)
            if tab_end is None or tab_end[-1] > rs:
                raise ModelError(f"{name} cannot be continued to complex R; the grid method "
                                 f"needs it analytic or clamped beyond R_s = {rs:.2f} bohr")

    def match_index(self, energy: float) -> int:
        """Outer classical turning point of channel 1 at the given energy."""
        v = self.v11.real[: self.rs_idx]
        imin = int(np.argmin(v))
        allowed = np.flatnonzero(v[imin:] > energy)
        m = imin + (allowed[0] if allowed.size else (self.rs_idx - imin) // 2)
        return int(min(max(m, 2), self.rs_idx - 2))

    def matching(self, e: complex, m: int):
        return _matching(self.v11, self.v22, self.v12, self.h1, self.h2, self.mass,
                         complex(e), self.n, m)

    def det(self, e: complex, m: int) -> complex:
        mm, cm, _, _ = self.matching(e, m)
        return (mm[0, 0] * mm[1, 1] - mm[0, 1] * mm[1, 0]) / (cm[0, 0] * cm[1, 1])


def solve_grid_shooting(model: MolecularModel, f: FieldPoint, guess: complex, origin_v: int = -1,
                        settings: SolverSettings | None = None, spacing: float | None = None
                        ) -> Resonance:
    """Two-channel resonance nearest to ``guess`` by shooting-matching.

    ``spacing`` (hartree) is the local level spacing used for the RootJumped
    check; by default it is estimated from the closed-channel well.
    """
    settings = settings or SolverSettings()
    prob = ShootingProblem(model, f, settings)
    m = prob.match_index(float(np.real(guess)))
    if spacing is None:
        spacing = _local_spacing(prob, float(np.real(guess)))
    e0 = complex(guess)
    e1 = e0 + 1e-3 * spacing
    f0, f1 = prob.det(e0, m), prob.det(e1, m)
    step = np.inf
    for it in range(1, settings.max_iter + 1):
        if f1 == f0:
            break
        e2 = e1 - f1 * (e1 - e0) / (f1 - f0)
        step = abs(e2 - e1)
        e0, f0 = e1, f1
        e1, f1 = e2, prob.det(e2, m)
        if step < settings.tol * max(1.0, abs(e1)) * 1e-3:
            break
    mm, cm, qs, ps = prob.matching(e1, m)
    sv = np.linalg.svd(mm / cm[0, 0], compute_uv=True)
    resid = float(sv[1][1] / max(1.0, sv[1][0]))
    if not (np.isfinite(e1) and resid < settings.tol):
        raise NotConverged(f"matching residual {resid:.2e} at {f}")
    if abs(e1 - guess) > spacing:
        raise RootJumped(f"converged {e1:.10f} is more than one spacing from guess {guess:.10f}")
    ym = np.conj(sv[2][1])  # right null vector of M
    y = _reconstruct(qs, ps, ym, prob.n, m)
    y = y[:-1:prob.sub]  # back to model grid
    dz = np.concatenate([prob.h2[:-1:prob.sub]]) * prob.sub
    norm = np.sqrt(np.sum((y[:, 0] ** 2 + y[:, 1] ** 2) * dz))
    y = y / norm
    if np.real(np.sum(y[:, 0])) < 0:
        y = -y
    return Resonance(origin_v, complex(e1), f, y[:, 0].copy(), y[:, 1].copy(), Method.GRID_SHOOTING,
                     True, resid, it, None, ((1, 1), (2, 0)))


def _local_spacing(prob: ShootingProblem, energy: float) -> float:
    """Semiclassical level spacing 2*pi/T of channel 1 at the given energy."""
    v = prob.v11.real[: prob.rs_idx]
    k2 = 2.0 * prob.mass * (energy - v)
    ok = k2 > 0
    if not ok.any():
        return 1e-4
    h = prob.x[1] - prob.x[0]
    period = 2.0 * np.sum(prob.mass / np.sqrt(k2[ok])) * h
    return float(2.0 * np.pi / period)
