"""Fixed-point reference solver on a short horizon.

Given front paths ``(g, h)`` the field problem on the prescribed moving
interval is solved by Heun's method; the paths are then replaced by the
integral formulas

    h~(t) = h0 + mu int_0^t int_g^h [Psi1(h - x) u + rho Psi2(h - x) v] dx ds

(and the mirrored one for ``g~``), integrated in time by the trapezoid rule.
This shares lattice and quadrature with :func:`evolve` but neither the time
integrator nor the coupling between fields and fronts, which makes it a
useful independent check on short horizons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from ..discrete_ops import Grid, build_grid, kernel_stencil, quadrature, slice_domain
from ..errors import InvalidParam, NoContraction
from ..model import InitialData, ModelParams, bounds_k1k2

__all__ = ["PicardResult", "DeltaBounds", "delta_bounds", "contraction_horizon", "picard_reference"]


@dataclass
class DeltaBounds:
    """Lower bounds ``h' >= mu delta1`` and ``-g' >= mu delta2`` on ``[0, T0]``."""

    delta1: float
    delta2: float
    eps0: float
    theta0: float
    T0: float

    def to_dict(self) -> dict:
        return {"delta1": self.delta1, "delta2": self.delta2, "eps0": self.eps0,
                "theta0": self.theta0, "T0": self.T0}


def _default_eps0(p: ModelParams, init: InitialData) -> float:
    S = min(p.J1.support_radius, p.J2.support_radius)
    return 0.9 * min(init.h0 / 4.0, S)


def contraction_horizon(p: ModelParams, init: InitialData, eps0: float | None = None) -> float:
    """``T0`` with ``2 h0 exp(mu (K1 + rho K2) T0) = 2 h0 + eps0/4``.

    Over ``[0, T0]`` each front moves by less than ``eps0/4``, hence by less
    than a quarter of the kernel support.
    """
    eps0 = _default_eps0(p, init) if eps0 is None else eps0
    K1, K2 = bounds_k1k2(p, *init.sup_norms())
    return math.log1p(eps0 / (8.0 * init.h0)) / (p.mu * (K1 + p.rho * K2))


def delta_bounds(p: ModelParams, init: InitialData, T0: float | None = None,
                 eps0: float | None = None) -> DeltaBounds:
    """Front-slope lower bounds from the initial data.

    ``delta1 = (eps0/4) theta0 (e^{-(d1+a11) T0} int_{h0-eps0/4}^{h0} u0
    + rho e^{-(d2+a22) T0} int_{h0-eps0/4}^{h0} v0)`` with
    ``theta0 = min_{|x| <= eps0} min(J1, J2)`` and ``eps0 < h0/4``;
    ``delta2`` is the same expression near ``-h0``.
    """
    eps0 = _default_eps0(p, init) if eps0 is None else eps0
    if not 0 < eps0 < init.h0 / 4:
        raise InvalidParam("eps0 must lie in (0, h0/4)")
    T0 = contraction_horizon(p, init, eps0) if T0 is None else T0
    s = np.linspace(-eps0, eps0, 2001)
    theta0 = float(min(p.J1.density(s).min(), p.J2.density(s).min()))
    if not theta0 > 0:
        raise InvalidParam("kernels must be positive on [-eps0, eps0]")
    h0 = init.h0
    a, b = h0 - eps0 / 4.0, h0

    def integral(f, lo, hi):
        return quad(lambda z: float(f(z)), lo, hi, limit=200)[0]

    e1, e2 = math.exp(-p.c1 * T0), math.exp(-p.c2 * T0)
    d1 = 0.25 * eps0 * theta0 * (e1 * integral(init.u0, a, b) + p.rho * e2 * integral(init.v0, a, b))
    d2 = 0.25 * eps0 * theta0 * (e1 * integral(init.u0, -b, -a) + p.rho * e2 * integral(init.v0, -b, -a))
    return DeltaBounds(d1, d2, eps0, theta0, T0)


@dataclass
class PicardResult:
    t: np.ndarray
    g: np.ndarray
    h: np.ndarray
    j_lo: int
    u: np.ndarray
    v: np.ndarray
    changes: list = field(default_factory=list)
    rates: np.ndarray | None = None

    @property
    def iterations(self) -> int:
        return len(self.changes)

    def strictly_decreasing(self) -> bool:
        c = np.asarray(self.changes)
        return bool(np.all(np.diff(c) < 0))


def picard_reference(p: ModelParams, init: InitialData, T_short: float | None = None, dt: float | None = None,
                     fp_tol: float = 1e-12, grid: Grid | None = None, max_iter: int = 100) -> PicardResult:
    """Fixed-point iteration on front paths over ``[0, T_short]``.

    Parameters
    ----------
    T_short : float, optional
        Horizon; defaults to :func:`contraction_horizon`.
    dt : float, optional
        Time step of the field solver (default ``T_short / 64``).
    fp_tol : float
        Stop when the sup-norm change of both paths drops below this.

    Raises
    ------
    NoContraction
        If the path change fails to decrease between iterations.
    """
    grid = build_grid(0.02) if grid is None else grid
    dx = grid.dx
    T = contraction_horizon(p, init) if T_short is None else float(T_short)
    n_t = max(1, int(math.ceil(T / (T / 64 if dt is None else dt) - 1e-9)))
    tau = T / n_t
    if tau * max(p.c1, p.c2) >= 1.0:
        raise InvalidParam("dt too large for the field solver")
    t = np.arange(n_t + 1) * tau
    h0 = init.h0
    g = np.full(n_t + 1, -h0)
    h = np.full(n_t + 1, h0)

    kv1, kv2, kvK = (kernel_stencil(k, dx) for k in (p.J1, p.J2, p.K))
    b1, b2, bK = ((k.size - 1) // 2 for k in (kv1, kv2, kvK))
    G = p.reaction.G

    def layout(g, h):
        # union slice and per-time embedded quadrature weights
        big = slice_domain(grid, float(g.min()), float(h.max()))
        J0, N = big.j_lo, big.n
        X = big.x
        W = np.zeros((g.size, N))
        for k in range(g.size):
            dom = slice_domain(grid, float(g[k]), float(h[k]))
            _, w = quadrature(dom)
            W[k, dom.j_lo - J0:dom.j_lo - J0 + dom.n] = w
        return J0, X, W

    def rhs(u, v, w):
        N = u.size
        wu, wv = w * u, w * v
        cu = np.convolve(wu, kv1)[b1:b1 + N]
        cv = np.convolve(wv, kv2)[b2:b2 + N]
        ck = np.convolve(wv, kvK)[bK:bK + N]
        mask = w > 0
        fu = (p.d1 * cu - p.c1 * u + p.a12 * ck) * mask
        fv = (p.d2 * cv - p.c2 * v + G(u)) * mask
        return fu, fv

    def rates(X, w, u, v, gk, hk):
        right = p.J1.tail(np.maximum(hk - X, 0.0)) * u + p.rho * p.J2.tail(np.maximum(hk - X, 0.0)) * v
        left = p.J1.tail(np.maximum(X - gk, 0.0)) * u + p.rho * p.J2.tail(np.maximum(X - gk, 0.0)) * v
        return -p.mu * float(np.dot(w, left)), p.mu * float(np.dot(w, right))

    changes = []
    for _ in range(max_iter):
        J0, X, W = layout(g, h)
        u, v = init.sample(X)
        u, v = u * (W[0] > 0), v * (W[0] > 0)
        gr = np.empty(n_t + 1)
        hr = np.empty(n_t + 1)
        gr[0], hr[0] = rates(X, W[0], u, v, g[0], h[0])
        for k in range(n_t):
            m1 = W[k + 1] > 0
            f1u, f1v = rhs(u, v, W[k])
            us, vs = (u + tau * f1u) * m1, (v + tau * f1v) * m1
            f2u, f2v = rhs(us, vs, W[k + 1])
            u = (u + 0.5 * tau * (f1u + f2u)) * m1
            v = (v + 0.5 * tau * (f1v + f2v)) * m1
            gr[k + 1], hr[k + 1] = rates(X, W[k + 1], u, v, g[k + 1], h[k + 1])
        cum_g = np.concatenate(([0.0], np.cumsum(0.5 * tau * (gr[1:] + gr[:-1]))))
        cum_h = np.concatenate(([0.0], np.cumsum(0.5 * tau * (hr[1:] + hr[:-1]))))
        g_new, h_new = -h0 + cum_g, h0 + cum_h
        change = float(max(np.abs(g_new - g).max(), np.abs(h_new - h).max()))
        g, h = g_new, h_new
        if changes and change >= changes[-1] and change > fp_tol:
            changes.append(change)
            raise NoContraction(f"path change grew from {changes[-2]:.3g} to {change:.3g}; shorten T_short")
        changes.append(change)
        if change < fp_tol:
            break
    else:
        raise NoContraction(f"no convergence to {fp_tol:g} in {max_iter} iterations")
    return PicardResult(t, g, h, J0, u, v, changes, np.column_stack((gr, hr)))
