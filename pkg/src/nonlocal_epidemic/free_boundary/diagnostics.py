"""Comparison-principle harness and the weighted-mass diagnostic."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..discrete_ops import quadrature, slice_domain
from ..errors import GridMismatch
from ..model import ModelParams, r0
from ..report import ValidationReport
from .evolve import Frame, RunResult

__all__ = ["comparison_check", "MassDiagnostic", "mass_diagnostic", "frame_mass"]


def comparison_check(run_lower: RunResult, run_upper: RunResult, tol: float = 1e-10) -> ValidationReport:
    """Check that ``run_upper`` dominates ``run_lower`` at every shared frame.

    Fronts may cross by less than one cell; fields are compared on the
    nodes common to both slices.  Each check records the worst margin,
    negative values meaning the upper run stays ahead.

    Raises
    ------
    GridMismatch
        If lattices, steps or frame times differ.
    """
    dx = run_lower.grid.dx
    if run_upper.grid.dx != dx or run_upper.dt != run_lower.dt:
        raise GridMismatch("runs use different lattices or time steps")
    tl = np.array([f.t for f in run_lower.frames])
    tu = np.array([f.t for f in run_upper.frames])
    n = min(tl.size, tu.size)
    if n == 0 or not np.array_equal(tl[:n], tu[:n]):
        raise GridMismatch("frame times are not aligned")
    worst_h = worst_g = worst_u = worst_v = -math.inf
    for fl, fu in zip(run_lower.frames[:n], run_upper.frames[:n]):
        worst_h = max(worst_h, fl.h - fu.h)
        worst_g = max(worst_g, fu.g - fl.g)
        lo = max(fl.j_lo, fu.j_lo)
        hi = min(fl.j_hi, fu.j_hi)
        if hi < lo:
            continue
        a = slice(lo - fl.j_lo, hi - fl.j_lo + 1)
        b = slice(lo - fu.j_lo, hi - fu.j_lo + 1)
        worst_u = max(worst_u, float(np.max(fl.u[a] - fu.u[b])))
        worst_v = max(worst_v, float(np.max(fl.v[a] - fu.v[b])))
    rep = ValidationReport(subject="comparison")
    rep.add("h_lower <= h_upper + dx", worst_h <= dx, worst_h)
    rep.add("g_lower >= g_upper - dx", worst_g <= dx, worst_g)
    rep.add("u_lower <= u_upper + tol", worst_u <= tol, worst_u)
    rep.add("v_lower <= v_upper + tol", worst_v <= tol, worst_v)
    return rep


def frame_mass(frame: Frame, grid, weight_v: float) -> float:
    if frame.u.size == 0:
        return 0.0
    dom = slice_domain(grid, frame.g, frame.h)
    _, w = quadrature(dom)
    return float(np.dot(w, frame.u + weight_v * frame.v))


@dataclass
class MassDiagnostic:
    """Weighted mass ``M(t) = int (u + a12/a22 v)`` per frame with the bound checks.

    ``width_bound`` and ``lyapunov`` are only evaluated when ``R0 <= 1`` and
    ``rho > 0``; otherwise they are ``None``.
    """

    t: np.ndarray
    M: np.ndarray
    width: np.ndarray
    m0: float | None
    width_bound: float | None
    width_ok: bool | None
    lyapunov: np.ndarray | None
    lyapunov_ok: bool | None
    max_lyapunov_increase: float | None

    def to_dict(self) -> dict:
        return {"m0": self.m0, "width_bound": self.width_bound, "width_ok": self.width_ok,
                "lyapunov_ok": self.lyapunov_ok, "max_lyapunov_increase": self.max_lyapunov_increase,
                "M0": float(self.M[0]) if self.M.size else 0.0}


def mass_diagnostic(run: RunResult, p: ModelParams | None = None, rel_tol: float = 1e-6) -> MassDiagnostic:
    """Mass series and, for ``R0 <= 1``, the width and Lyapunov-type bounds.

    With ``m0 = min(1, d2 a12 / (rho d1 a22))`` the quantity
    ``M(t) + (m0 d1 / mu)(h - g)`` is nonincreasing and
    ``h - g <= 2 h0 + (mu / (m0 d1)) M(0)``.  Monotonicity is checked up to
    ``rel_tol * M(0)``.
    """
    p = run.p if p is None else p
    wv = p.a12 / p.a22
    t = np.array([f.t for f in run.frames])
    M = np.array([frame_mass(f, run.grid, wv) for f in run.frames])
    width = np.array([f.h - f.g for f in run.frames])
    if r0(p) > 1 or p.rho <= 0 or p.mu <= 0:
        return MassDiagnostic(t, M, width, None, None, None, None, None, None)
    m0 = min(1.0, p.d2 * p.a12 / (p.rho * p.d1 * p.a22))
    bound = 2.0 * run.init.h0 + p.mu / (m0 * p.d1) * M[0]
    lyap = M + (m0 * p.d1 / p.mu) * width
    inc = float(np.max(np.diff(lyap))) if lyap.size > 1 else -math.inf
    return MassDiagnostic(t, M, width, m0, float(bound), bool(np.all(width <= bound)), lyap,
                          bool(inc <= rel_tol * M[0]), inc)
