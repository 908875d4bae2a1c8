"""Fixed-interval problem on ``[-l, l]``: time evolution and positive steady states."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .discrete_ops import Grid, conv_matrix, quadrature, slice_domain
from .eigen import lambda0_interval
from .errors import InvalidParam, NoConvergence, SandwichViolation, StepTooLarge
from .model import ModelParams, equilibrium, r0

__all__ = ["FixedOperator", "FixedRun", "SteadyKind", "SteadyState", "evolve_fixed", "steady_state", "upper_constants"]


class FixedOperator:
    """Right-hand side of the fixed-interval system on the closed slice of ``[g, h]``."""

    def __init__(self, p: ModelParams, grid: Grid, g: float, h: float):
        self.p = p
        self.grid = grid
        self.dom = slice_domain(grid, g, h)
        self.x, self.w = quadrature(self.dom, closed=True)
        self.C1 = sp.csr_matrix(conv_matrix(p.J1, grid, self.dom, closed=True))
        self.C2 = sp.csr_matrix(conv_matrix(p.J2, grid, self.dom, closed=True))
        self.CK = sp.csr_matrix(conv_matrix(p.K, grid, self.dom, closed=True))

    @property
    def n(self) -> int:
        return self.x.size

    def rhs(self, u, v):
        p = self.p
        fu = p.d1 * (self.C1 @ u) - p.c1 * u + p.a12 * (self.CK @ v)
        fv = p.d2 * (self.C2 @ v) - p.c2 * v + p.reaction.G(u)
        return fu, fv

    def step(self, u, v, dt):
        fu, fv = self.rhs(u, v)
        return u + dt * fu, v + dt * fv

    def residual(self, u, v) -> float:
        fu, fv = self.rhs(u, v)
        return float(max(np.abs(fu).max(), np.abs(fv).max()))


@dataclass
class FixedRun:
    x: np.ndarray
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def final(self):
        return self.u[-1], self.v[-1]


def _max_rate(p: ModelParams) -> float:
    return max(p.c1, p.c2)


def evolve_fixed(p: ModelParams, l: float, init, dt: float, T: float, grid: Grid, stride: int = 1) -> FixedRun:
    """Explicit Euler on ``[-l, l]``.

    ``init`` is either a pair of arrays on the closed node set or an object
    with a ``sample(x)`` method (e.g. :class:`~nonlocal_epidemic.model.InitialData`).
    """
    if dt * _max_rate(p) >= 1.0:
        raise StepTooLarge(f"dt*max(d1+a11, d2+a22) = {dt * _max_rate(p):.3g} must be < 1")
    op = FixedOperator(p, grid, -l, l)
    if hasattr(init, "sample"):
        u, v = (np.asarray(a, float) for a in init.sample(op.x))
    else:
        u, v = (np.asarray(a, float).copy() for a in init)
    if u.shape != (op.n,) or v.shape != (op.n,):
        raise InvalidParam(f"initial fields must have shape ({op.n},)")
    if np.any(u < 0) or np.any(v < 0):
        raise InvalidParam("initial fields must be nonnegative")
    nsteps = int(math.ceil(T / dt - 1e-9))
    ts, us, vs = [0.0], [u.copy()], [v.copy()]
    for i in range(1, nsteps + 1):
        # the last step is shortened to land on T
        u, v = op.step(u, v, dt if i < nsteps else T - (nsteps - 1) * dt)
        if i % stride == 0 or i == nsteps:
            ts.append(i * dt if i < nsteps else T)
            us.append(u.copy())
            vs.append(v.copy())
    return FixedRun(op.x, np.array(ts), np.array(us), np.array(vs))


class SteadyKind(str, enum.Enum):
    TRIVIAL = "trivial"
    POSITIVE = "positive"


@dataclass
class SteadyState:
    l: float
    x: np.ndarray
    w: np.ndarray
    z: np.ndarray
    kind: SteadyKind
    gap: float = 0.0
    residual: float = 0.0
    iterations: int = 0
    lambda0: float = math.nan
    epsilon: float = math.nan
    upper_start: tuple = ()
    min_margin: float = 0.0
    gap_history: list = field(default_factory=list, repr=False)

    def center(self):
        i = int(np.argmin(np.abs(self.x)))
        return float(self.w[i]), float(self.z[i])

    def to_dict(self) -> dict:
        return {
            "l": self.l, "kind": self.kind.value, "gap": self.gap, "residual": self.residual,
            "iterations": self.iterations, "lambda0": self.lambda0, "epsilon": self.epsilon,
            "upper_start": list(self.upper_start), "min_margin": self.min_margin,
        }


def upper_constants(p: ModelParams, op: FixedOperator, M1: float | None = None):
    """Constant upper pair ``(M1, M2)`` with ``G(M1)/M1 < a11 a22 / a12``.

    ``M2 = M1 a11 / a12``, divided by the largest row sum of the discrete
    ``K`` convolution when that exceeds one (quadrature overshoot).
    """
    bound = p.a11 * p.a22 / p.a12
    G = p.reaction.G
    if M1 is None:
        eq = equilibrium(p)
        M1 = 2.0 * eq[0] if eq else 1.0
        while G(M1) / M1 >= 0.5 * bound:
            M1 *= 2.0
    if not G(M1) / M1 < bound:
        raise InvalidParam(f"M1={M1} does not satisfy G(M1)/M1 < a11 a22 / a12")
    rs = float(np.max(op.CK @ np.ones(op.n)))
    M2 = M1 * p.a11 / p.a12 / max(1.0, rs)
    return float(M1), float(M2)


def steady_state(p: ModelParams, l: float, grid: Grid, tol: float = 1e-8, max_iter: int = 1_000_000,
                 M1: float | None = None, eigen=None) -> SteadyState:
    """Unique nonnegative steady state on ``[-l, l]`` by two-sided monotone iteration.

    If ``lambda0(l) <= 0`` the zero state is returned.  Otherwise the explicit
    Euler map with ``dt = 1 / max(d1 + a11, d2 + a22)`` (the largest
    order-preserving step) is iterated from a constant upper pair and from
    ``eps * (theta1, theta2)``; the iteration stops when the two sequences
    are within ``tol`` of each other, both move by less than ``tol/10`` per
    step and the averaged pair has residual at most ``tol``.
    """
    op = FixedOperator(p, grid, -l, l)
    ev = eigen if eigen is not None else lambda0_interval(p, -l, l, grid)
    if ev.lambda0 <= 0 or r0(p) <= 1:
        zero = np.zeros(op.n)
        return SteadyState(l, op.x, zero, zero.copy(), SteadyKind.TRIVIAL, lambda0=ev.lambda0)

    M1, M2 = upper_constants(p, op, M1)
    U, V = np.full(op.n, M1), np.full(op.n, M2)
    fU, fV = op.rhs(U, V)
    if np.any(fU > 1e-12 * M1) or np.any(fV > 1e-12 * M1):
        raise SandwichViolation("constant pair is not a discrete upper solution")

    th1, th2 = ev.theta1, ev.theta2
    eps = None
    for k in range(0, 80):
        e = 2.0 ** (-k)
        f1, f2 = op.rhs(e * th1, e * th2)
        if np.all(f1 >= 0) and np.all(f2 >= 0) and np.all(e * th1 <= U) and np.all(e * th2 <= V):
            eps = e
            break
    if eps is None:
        raise NoConvergence("no admissible epsilon for the lower solution")
    Lu, Lv = eps * th1, eps * th2

    dt = 1.0 / _max_rate(p)
    # ordering slack for rounding once the two sequences coincide
    slack = 1e-13 * max(M1, M2)
    history = []
    min_margin = math.inf
    for it in range(1, max_iter + 1):
        U2, V2 = op.step(U, V, dt)
        Lu2, Lv2 = op.step(Lu, Lv, dt)
        step = max(np.abs(U2 - U).max(), np.abs(V2 - V).max(), np.abs(Lu2 - Lu).max(), np.abs(Lv2 - Lv).max())
        U, V, Lu, Lv = U2, V2, Lu2, Lv2
        margin = float(min((U - Lu).min(), (V - Lv).min()))
        min_margin = min(min_margin, margin)
        if margin < -slack:
            raise SandwichViolation(f"upper iterate fell below lower iterate by {-margin:.3g} at step {it}")
        gap = float(max((U - Lu).max(), (V - Lv).max()))
        if it % 16 == 0:
            history.append(gap)
        if gap <= tol and step < tol / 10:
            w, z = 0.5 * (U + Lu), 0.5 * (V + Lv)
            res = op.residual(w, z)
            if res <= tol:
                return SteadyState(l, op.x, w, z, SteadyKind.POSITIVE, gap, res, it, ev.lambda0, eps,
                                   (M1, M2), min_margin, history)
    raise NoConvergence(f"monotone iteration did not converge in {max_iter} steps")
