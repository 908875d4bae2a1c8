"""Explicit front-tracking integrator for the moving-interval system.

Fields live on the interior lattice nodes of ``(g(t), h(t))`` and are taken
as zero at and beyond the fronts.  When a front crosses a lattice node the
node joins the slice with value zero, so field storage is never remapped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..discrete_ops import Grid, build_grid, kernel_stencil, quadrature, slice_domain
from ..errors import FrontOvershoot, InvalidParam, StepTooLarge
from ..model import InitialData, ModelParams, bounds_k1k2

__all__ = ["Frame", "Violation", "RunResult", "evolve", "suggest_dt", "first_moment", "BOUND_TOL"]

BOUND_TOL = 1e-10


@dataclass
class Frame:
    """Snapshot at time ``t``; ``u``/``v`` sit on nodes ``j_lo*dx, ..., j_hi*dx``."""

    t: float
    g: float
    h: float
    j_lo: int
    u: np.ndarray
    v: np.ndarray

    @property
    def j_hi(self) -> int:
        return self.j_lo + self.u.size - 1

    def x(self, dx: float) -> np.ndarray:
        return (self.j_lo + np.arange(self.u.size)) * dx


@dataclass
class Violation:
    t: float
    kind: str
    value: float


@dataclass
class RunResult:
    """Output of :func:`evolve`.

    ``fronts`` has one row per step ``(t, g, h, g', h')``; ``sups`` holds
    ``(sup u, sup v)`` on the same time grid.  ``frames`` are strided.
    """

    p: ModelParams
    init: InitialData
    grid: Grid
    dt: float
    frames: list
    fronts: np.ndarray
    sups: np.ndarray
    K1: float
    K2: float
    violations: list = field(default_factory=list)
    stopped_early: bool = False
    decision: object = None

    @property
    def t(self) -> np.ndarray:
        return self.fronts[:, 0]

    @property
    def g(self) -> np.ndarray:
        return self.fronts[:, 1]

    @property
    def h(self) -> np.ndarray:
        return self.fronts[:, 2]

    @property
    def final(self) -> Frame:
        return self.frames[-1]

    def center(self):
        """Field values at the node closest to the midpoint of the final interval."""
        f = self.final
        x = f.x(self.grid.dx)
        if x.size == 0:
            return 0.0, 0.0
        i = int(np.argmin(np.abs(x - 0.5 * (f.g + f.h))))
        return float(f.u[i]), float(f.v[i])

    def front_speeds(self) -> np.ndarray:
        return self.fronts[:, 3:5]


def first_moment(kernel) -> float:
    """``int_0^inf Psi(s) ds``, the largest possible value of ``int_g^h Psi(h - x) dx``."""
    S = kernel.support_radius
    s = np.linspace(0.0, S, 4001)
    return float(np.trapezoid(kernel.tail(s), s))


def suggest_dt(p: ModelParams, init: InitialData, grid: Grid, safety: float = 0.5, dt_max: float = 0.05) -> float:
    """Step satisfying both the positivity bound and the front-motion bound.

    Front speeds never exceed ``mu (K1 m1 + rho K2 m2)`` with ``m_i`` the
    first moment of ``J_i``; the step keeps that motion below
    ``safety * dx``.
    """
    us, vs = init.sup_norms()
    K1, K2 = bounds_k1k2(p, us, vs)
    speed = p.mu * (K1 * first_moment(p.J1) + p.rho * K2 * first_moment(p.J2))
    dt = min(dt_max, 0.9 / max(p.c1, p.c2))
    if speed > 0:
        dt = min(dt, safety * grid.dx / speed)
    return dt


def evolve(p: ModelParams, init: InitialData, dt: float, T: float, stride: int | None = None,
           grid: Grid | None = None, dx: float = 0.02, monitor=None) -> RunResult:
    """Integrate fields and fronts by explicit Euler up to time ``T``.

    Parameters
    ----------
    p : ModelParams
        Model coefficients; ``mu = 0`` is accepted only when
        ``p.allow_zero_mu`` is set.
    init : InitialData
        Initial half-width and profiles.
    dt : float
        Time step.  Must satisfy ``dt * max(d1 + a11, d2 + a22) < 1``.
    T : float
        Final time.
    stride : int, optional
        Store a frame every ``stride`` steps (default: about one per unit time).
    grid : Grid, optional
        Lattice; built from ``dx`` when omitted.
    monitor : callable, optional
        Called after every step as ``monitor(t, g, h, gp, hp, su, sv)``; a
        non-None return value stops the run and is stored as ``decision``.
        A monitor with a positive ``field_every`` attribute also receives
        ``monitor.field_check(t, g, h, x, u, v)`` every that many steps.

    Raises
    ------
    StepTooLarge
        If the positivity condition on ``dt`` fails.
    FrontOvershoot
        If a front moves by ``dx`` or more in one step.
    """
    grid = build_grid(dx) if grid is None else grid
    dxg = grid.dx
    rate = max(p.c1, p.c2)
    if not dt > 0 or not T > 0:
        raise InvalidParam("dt and T must be positive")
    if dt * rate >= 1.0:
        raise StepTooLarge(f"dt*max(d1+a11, d2+a22) = {dt * rate:.3g} must be < 1")
    nsteps = int(math.ceil(T / dt - 1e-9))
    if stride is None:
        stride = max(1, int(round(1.0 / dt)))

    g, h = -float(init.h0), float(init.h0)
    dom = slice_domain(grid, g, h)
    x, w = quadrature(dom)
    u, v = init.sample(x)
    us, vs = init.sup_norms()
    K1, K2 = bounds_k1k2(p, max(us, float(u.max(initial=0.0))), max(vs, float(v.max(initial=0.0))))

    kv1 = kernel_stencil(p.J1, dxg)
    kv2 = kernel_stencil(p.J2, dxg)
    kvK = kernel_stencil(p.K, dxg)
    b1, b2, bK = (kv1.size - 1) // 2, (kv2.size - 1) // 2, (kvK.size - 1) // 2
    # nodes within the tail support of each front
    nb = int(math.ceil(max(p.J1.support_radius, p.J2.support_radius) / dxg)) + 1
    G = p.reaction.G
    d1, d2, a12, c1, c2, mu, rho = p.d1, p.d2, p.a12, p.c1, p.c2, p.mu, p.rho

    def flux(x, w, u, v, g, h):
        n = x.size
        lo = slice(0, min(nb, n))
        hi = slice(max(0, n - nb), n)
        right = p.J1.tail(np.maximum(h - x[hi], 0.0)) * u[hi]
        left = p.J1.tail(np.maximum(x[lo] - g, 0.0)) * u[lo]
        if rho:
            right = right + rho * p.J2.tail(np.maximum(h - x[hi], 0.0)) * v[hi]
            left = left + rho * p.J2.tail(np.maximum(x[lo] - g, 0.0)) * v[lo]
        return -mu * float(np.dot(w[lo], left)), mu * float(np.dot(w[hi], right))

    fronts = np.empty((nsteps + 1, 5))
    sups = np.empty((nsteps + 1, 2))
    frames = []
    violations = []
    j_lo = dom.j_lo
    gp, hp = flux(x, w, u, v, g, h)
    fronts[0] = (0.0, g, h, gp, hp)
    sups[0] = (u.max(initial=0.0), v.max(initial=0.0))
    frames.append(Frame(0.0, g, h, j_lo, u.copy(), v.copy()))
    decision = None
    last = nsteps
    field_every = getattr(monitor, "field_every", 0)
    for k in range(1, nsteps + 1):
        n = u.size
        wu, wv = w * u, w * v
        cu = np.convolve(wu, kv1)[b1:b1 + n]
        cv = np.convolve(wv, kv2)[b2:b2 + n]
        ck = np.convolve(wv, kvK)[bK:bK + n]
        fu = d1 * cu - c1 * u + a12 * ck
        fv = d2 * cv - c2 * v + G(u)
        # the last step is shortened to land on T
        tau = dt if k < nsteps else T - (nsteps - 1) * dt
        u = u + tau * fu
        v = v + tau * fv
        dg, dh = tau * gp, tau * hp
        if dh >= dxg or -dg >= dxg:
            raise FrontOvershoot(f"front moved {max(dh, -dg):.3g} >= dx={dxg:.3g} at t={k * dt:.6g}; reduce dt")
        g, h = g + dg, h + dh
        t = k * dt if k < nsteps else T
        new = slice_domain(grid, g, h)
        left_pad = j_lo - new.j_lo
        right_pad = new.j_hi - (j_lo + n - 1)
        if left_pad or right_pad:
            if left_pad < 0 or right_pad < 0:
                raise FrontOvershoot(f"front retreated at t={t:.6g}")
            u = np.concatenate((np.zeros(left_pad), u, np.zeros(right_pad)))
            v = np.concatenate((np.zeros(left_pad), v, np.zeros(right_pad)))
            j_lo = new.j_lo
        dom = new
        x, w = quadrature(dom)
        su, sv = float(u.max(initial=0.0)), float(v.max(initial=0.0))
        mu_min = min(float(u.min(initial=0.0)), float(v.min(initial=0.0)))
        if mu_min < 0:
            violations.append(Violation(t, "negative", mu_min))
        if su > K1 + BOUND_TOL:
            violations.append(Violation(t, "u>K1", su - K1))
        if sv > K2 + BOUND_TOL:
            violations.append(Violation(t, "v>K2", sv - K2))
        gp, hp = flux(x, w, u, v, g, h)
        fronts[k] = (t, g, h, gp, hp)
        sups[k] = (su, sv)
        if k % stride == 0 or k == nsteps:
            frames.append(Frame(t, g, h, j_lo, u.copy(), v.copy()))
        if monitor is not None:
            decision = monitor(t, g, h, gp, hp, su, sv)
            if decision is None and field_every and k % field_every == 0:
                decision = monitor.field_check(t, g, h, x, u, v)
            if decision is not None:
                last = k
                if frames[-1].t != t:
                    frames.append(Frame(t, g, h, j_lo, u.copy(), v.copy()))
                break
    return RunResult(p, init, grid, dt, frames, fronts[:last + 1].copy(), sups[:last + 1].copy(), K1, K2,
                     violations, last < nsteps or decision is not None, decision)
