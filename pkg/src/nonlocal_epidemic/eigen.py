"""Principal eigenvalues of the linearized coupled nonlocal operator.

The discrete operator on a closed interval ``[g, h]`` is the ``2N x 2N``
block matrix::

    A = [ d1 C(J1) - (d1 + a11) I        a12 C(K)              ]
        [ G'(0) I                        d2 C(J2) - (d2 + a22) I ]

where ``C(j)`` is the trapezoid convolution matrix of
:func:`~nonlocal_epidemic.discrete_ops.conv_matrix`.  With the shift
``s = max(d1 + a11, d2 + a22)`` the matrix ``A + s I`` is nonnegative and
irreducible, so its Perron root minus ``s`` is the principal eigenvalue and
its Perron vector is componentwise positive.

Two Perron solvers are provided.  ``"power"`` is plain power iteration.
``"noda"`` is shifted inverse iteration whose shift is the upper
Collatz-Wielandt bound ``max_i (Bx)_i / x_i``.  Because ``min_i (Bx)_i/x_i``
is a lower bound, every ``noda`` result carries a certified bracket.

The resolvent curve ``r(alpha)`` (spectral radius of
``J (T + alpha I)^{-1}``) is computed independently of ``A`` and is used as
a cross-check: ``r(lambda0) = 1``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discrete_ops import DomainSlice, Grid, conv_matrix, quadrature, slice_domain
from .errors import (
    DegenerateDomain,
    EmptyDomain,
    NoBracket,
    NoConvergence,
    SingularResolvent,
    SubcriticalModel,
)
from .kernels import Kernel
from .model import ModelParams, r0

log = logging.getLogger(__name__)

__all__ = [
    "EigenResult",
    "SpectralCurve",
    "LstarResult",
    "perron",
    "coupled_matrix",
    "k_principal",
    "lambda1_closed",
    "lambda0",
    "lambda0_interval",
    "lambda_infinity",
    "r_alpha",
    "alpha0",
    "spectral_curve",
    "lambda0_curve",
    "find_lstar",
    "bracket_lstar",
    "apply_linearized",
]

EIGEN_TOL = 1e-12
MAX_ITER = 50_000
MAX_NODES = 4001


@dataclass
class EigenResult:
    lambda0: float
    x: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    residual: float
    iterations: int
    lower: float = -math.inf
    upper: float = math.inf
    weights: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "lambda0": self.lambda0,
            "residual": self.residual,
            "iterations": self.iterations,
            "lower_bound": self.lower,
            "upper_bound": self.upper,
            "nodes": int(self.x.size),
        }


@dataclass
class SpectralCurve:
    alphas: np.ndarray
    r_values: np.ndarray

    def is_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.r_values) < 0))


@dataclass
class PerronResult:
    rho: float
    vector: np.ndarray
    iterations: int
    lower: float
    upper: float


def _cw_bounds(Bx, x):
    r = Bx / x
    return float(r.min()), float(r.max())


def perron(B, method: str = "noda", tol: float = EIGEN_TOL, max_iter: int = MAX_ITER, x0=None) -> PerronResult:
    """Perron root and positive vector of a nonnegative irreducible matrix.

    ``B`` may be dense or sparse.  The start vector is all ones unless
    ``x0`` is given.  The returned vector has unit sup-norm.
    """
    n = B.shape[0]
    x = np.ones(n) if x0 is None else np.array(x0, dtype=float)
    x /= np.abs(x).max()
    issparse = sp.issparse(B)
    if method == "power":
        prev = None
        for it in range(1, max_iter + 1):
            y = B @ x
            rho = float(np.abs(y).max())
            x = y / rho
            if prev is not None and abs(rho - prev) < tol * max(1.0, abs(rho)):
                lo, hi = _cw_bounds(B @ x, x)
                return PerronResult(rho, x, it, lo, hi)
            prev = rho
        raise NoConvergence(f"power iteration did not converge in {max_iter} iterations")
    if method != "noda":
        raise ValueError(f"unknown Perron method {method!r}")

    eye = sp.identity(n, format="csc") if issparse else np.eye(n)
    Bc = B.tocsc() if issparse else B
    Bx = B @ x
    lo, hi = _cw_bounds(Bx, x)
    for it in range(1, min(max_iter, 200) + 1):
        if hi - lo <= tol * max(1.0, abs(hi)):
            return PerronResult(0.5 * (lo + hi), x, it - 1, lo, hi)
        # a hair above the upper bound keeps the shifted matrix an M-matrix
        sigma = hi + 1e-3 * (hi - lo)
        M = sigma * eye - Bc
        if issparse:
            y = spla.splu(M).solve(x)
        else:
            y = sla.lu_solve(sla.lu_factor(M, check_finite=False), x, check_finite=False)
        if not np.all(y > 0):
            y = np.abs(y)
        x = y / y.max()
        Bx = B @ x
        lo_new, hi_new = _cw_bounds(Bx, x)
        lo, hi = max(lo, lo_new), min(hi, hi_new)
    raise NoConvergence("shifted inverse iteration did not converge")


def _closed_slice(grid: Grid, g: float, h: float) -> DomainSlice:
    try:
        dom = slice_domain(grid, g, h)
    except EmptyDomain as exc:
        raise DegenerateDomain(str(exc)) from exc
    if dom.n < 1:
        raise DegenerateDomain("interval contains no lattice node")
    if dom.n + 2 > MAX_NODES + 2:
        log.warning("eigen grid has %d nodes per component (> %d); accuracy and memory degrade",
                    dom.n + 2, MAX_NODES)
    return dom


def coupled_matrix(p: ModelParams, grid: Grid, dom: DomainSlice, shift: float = 0.0):
    """Sparse discretization of ``J - T`` on the closed slice, plus ``shift * I``."""
    C1 = sp.csr_matrix(conv_matrix(p.J1, grid, dom, closed=True))
    C2 = sp.csr_matrix(conv_matrix(p.J2, grid, dom, closed=True))
    CK = sp.csr_matrix(conv_matrix(p.K, grid, dom, closed=True))
    N = C1.shape[0]
    I = sp.identity(N, format="csr")
    A = sp.bmat([
        [p.d1 * C1 + (shift - p.c1) * I, p.a12 * CK],
        [p.beta * I, p.d2 * C2 + (shift - p.c2) * I],
    ], format="csr")
    return A


def apply_linearized(p: ModelParams, grid: Grid, dom: DomainSlice, theta1, theta2):
    """Image of ``(theta1, theta2)`` under the discrete ``J - T``."""
    A = coupled_matrix(p, grid, dom)
    y = A @ np.concatenate([theta1, theta2])
    N = len(theta1)
    return y[:N], y[N:]


def lambda0_interval(p: ModelParams, g: float, h: float, grid: Grid, method: str = "noda",
                     tol: float = EIGEN_TOL, max_iter: int = MAX_ITER) -> EigenResult:
    """Principal eigenvalue of the coupled operator on ``[g, h]``."""
    dom = _closed_slice(grid, g, h)
    s = max(p.c1, p.c2)
    B = coupled_matrix(p, grid, dom, shift=s)
    if method == "power":
        B = B.toarray() if B.shape[0] <= 600 else B
    res = perron(B, method=method, tol=tol, max_iter=max_iter)
    x, w = quadrature(dom, closed=True)
    theta = res.vector
    lam = res.rho - s
    A = coupled_matrix(p, grid, dom)
    residual = float(np.abs(A @ theta - lam * theta).max())
    N = x.size
    return EigenResult(lam, x, theta[:N].copy(), theta[N:].copy(), residual, res.iterations,
                       res.lower - s, res.upper - s, w)


def lambda0(p: ModelParams, l: float, grid: Grid, method: str = "noda", tol: float = EIGEN_TOL,
            max_iter: int = MAX_ITER) -> EigenResult:
    """Principal eigenvalue ``lambda0(l)`` on ``[-l, l]``."""
    if l < 2 * grid.dx:
        raise DegenerateDomain(f"half-width {l} is below 2*dx")
    return lambda0_interval(p, -l, l, grid, method=method, tol=tol, max_iter=max_iter)


def k_principal(K: Kernel, l: float, grid: Grid, tol: float = EIGEN_TOL, method: str = "noda"):
    """Principal eigenvalue ``lambda~`` and eigenfunction of ``f -> int_{-l}^{l} K(x-y) f(y) dy``.

    Returns ``(lambda_tilde, theta_star, x, rayleigh)`` where ``rayleigh`` is
    the weighted Rayleigh quotient of ``theta_star``.
    """
    if l < 2 * grid.dx:
        raise DegenerateDomain(f"half-width {l} is below 2*dx")
    dom = _closed_slice(grid, -l, l)
    C = conv_matrix(K, grid, dom, closed=True)
    if sp.issparse(C):
        C = C.tocsr()
    res = perron(C, method=method, tol=tol)
    x, w = quadrature(dom, closed=True)
    th = res.vector
    rayleigh = float(th @ (w * (C @ th)) / (th @ (w * th)))
    return res.rho, th, x, rayleigh


def lambda1_closed(p: ModelParams, lambda_tilde: float):
    """Closed-form ``(lambda1, lambda2)`` of the reaction-kernel subproblem.

    Also verifies ``delta1 = (d2 + a22 - lambda1) / G'(0) > 0``.
    """
    if not lambda_tilde > 0:
        raise ValueError("lambda_tilde must be positive")
    b = p.beta
    tr = p.c1 + p.c2
    disc = math.sqrt((p.c1 - p.c2) ** 2 + 4.0 * p.a12 * b * lambda_tilde)
    lam1, lam2 = 0.5 * (tr - disc), 0.5 * (tr + disc)
    delta1 = (p.c2 - lam1) / b
    if not delta1 > 0:
        raise ArithmeticError(f"delta1 = {delta1} is not positive")
    return lam1, lam2


def lambda_infinity(p: ModelParams) -> float:
    """Whole-line constant-mode growth rate, an upper bound for every ``lambda0(l)``."""
    return 0.5 * (-(p.a11 + p.a22) + math.sqrt((p.a11 - p.a22) ** 2 + 4.0 * p.a12 * p.beta))


class _Resolvent:
    """Action of ``J (T + alpha I)^{-1}`` on the closed slice of ``[-l, l]``.

    The first component is eliminated so only one ``N x N`` solve with
    ``c1 c2 / (a12 G'(0)) I - C(K)`` is needed per application.
    """

    def __init__(self, p: ModelParams, grid: Grid, dom: DomainSlice, alpha: float):
        self.p = p
        self.C1 = sp.csr_matrix(conv_matrix(p.J1, grid, dom, closed=True))
        self.C2 = sp.csr_matrix(conv_matrix(p.J2, grid, dom, closed=True))
        CK = conv_matrix(p.K, grid, dom, closed=True)
        self.N = self.C1.shape[0]
        self.set_alpha(alpha, CK)

    def set_alpha(self, alpha: float, CK=None):
        p = self.p
        if CK is None:
            CK = self._CK
        self._CK = CK
        self.alpha = alpha
        self.c1 = p.c1 + alpha
        self.c2 = p.c2 + alpha
        if self.c1 <= 0 or self.c2 <= 0:
            raise SingularResolvent(f"alpha={alpha} makes the diagonal of T + alpha I nonpositive")
        diag = self.c1 * self.c2 / (p.a12 * p.beta)
        N = self.N
        if sp.issparse(CK):
            S = (diag * sp.identity(N, format="csc") - CK.tocsc())
            lu = spla.splu(S)
            self._solve = lu.solve
            # the eliminated system is singular exactly at alpha = -lambda1
            dU = np.abs(lu.U.diagonal())
        else:
            lu = sla.lu_factor(diag * np.eye(N) - CK, check_finite=False)
            self._solve = lambda b: sla.lu_solve(lu, b, check_finite=False)
            dU = np.abs(np.diag(lu[0]))
        if dU.min() <= 1e-13 * dU.max():
            raise SingularResolvent(f"(T + alpha I) is numerically singular at alpha={alpha}")

    def resolve(self, phi1, phi2):
        p = self.p
        rhs = phi1 / p.a12 + self.c1 / (p.a12 * p.beta) * phi2
        psi2 = self._solve(rhs)
        psi1 = (self.c2 * psi2 - phi2) / p.beta
        return psi1, psi2

    def __call__(self, z):
        N = self.N
        psi1, psi2 = self.resolve(z[:N], z[N:])
        return np.concatenate([self.p.d1 * (self.C1 @ psi1), self.p.d2 * (self.C2 @ psi2)])


def _lambda1_on(p: ModelParams, grid: Grid, l: float) -> float:
    lt, _, _, _ = k_principal(p.K, l, grid)
    return lambda1_closed(p, lt)[0]


def _radius(op: _Resolvent, tol: float, max_iter: int, x0=None, target: float | None = None):
    """Power iteration with Collatz-Wielandt brackets.

    With ``target`` set, stops as soon as the bracket excludes ``target``.
    """
    z = np.ones(2 * op.N) if x0 is None else x0.copy()
    z /= z.max()
    lo, hi = -math.inf, math.inf
    for it in range(1, max_iter + 1):
        y = op(z)
        if not np.all(y > 0):
            raise SingularResolvent(f"resolvent lost positivity at alpha={op.alpha}")
        r_lo, r_hi = _cw_bounds(y, z)
        lo, hi = max(lo, r_lo), min(hi, r_hi)
        z = y / y.max()
        if hi - lo <= tol * max(1.0, hi):
            return 0.5 * (lo + hi), z, lo, hi, it
        if target is not None and (lo > target or hi < target):
            return 0.5 * (lo + hi), z, lo, hi, it
    raise NoConvergence(f"r(alpha) power iteration did not converge at alpha={op.alpha}")


def r_alpha(p: ModelParams, l: float, alpha: float, grid: Grid, tol: float = 1e-12,
            max_iter: int = 200_000, check_lambda1: bool = True) -> float:
    """Spectral radius of ``J (T + alpha I)^{-1}`` on ``[-l, l]``; needs ``alpha > -lambda1``."""
    if check_lambda1:
        lam1 = _lambda1_on(p, grid, l)
        if alpha <= -lam1:
            raise SingularResolvent(f"alpha={alpha} <= -lambda1={-lam1}")
    dom = _closed_slice(grid, -l, l)
    op = _Resolvent(p, grid, dom, alpha)
    return _radius(op, tol, max_iter)[0]


def spectral_curve(p: ModelParams, l: float, alphas, grid: Grid, tol: float = 1e-10) -> SpectralCurve:
    alphas = np.asarray(alphas, dtype=float)
    lam1 = _lambda1_on(p, grid, l)
    if np.any(alphas <= -lam1):
        raise SingularResolvent(f"all alphas must exceed -lambda1={-lam1}")
    dom = _closed_slice(grid, -l, l)
    op = _Resolvent(p, grid, dom, float(alphas[0]))
    vals, z = [], None
    for a in alphas:
        op.set_alpha(float(a))
        r, z, _, _, _ = _radius(op, tol, 200_000, x0=z)
        vals.append(r)
    return SpectralCurve(alphas, np.array(vals))


def alpha0(p: ModelParams, l: float, grid: Grid, xtol: float = 1e-9, r_tol: float = 1e-13):
    """Solve ``r(alpha) = 1`` by bisection on ``(-lambda1, inf)``.

    Each probe only iterates until the Collatz-Wielandt bracket of ``r``
    excludes 1, warm-starting from the previous vector.
    """
    lam1 = _lambda1_on(p, grid, l)
    dom = _closed_slice(grid, -l, l)
    lo = -lam1
    hi = max(1.0, 2.0 * abs(lo))
    op = _Resolvent(p, grid, dom, hi)
    z = None
    while True:
        r, z, rlo, rhi, _ = _radius(op, r_tol, 200_000, target=1.0)
        if rhi < 1.0:
            break
        hi *= 2.0
        op.set_alpha(hi)
    # r -> inf as alpha -> -lambda1, so the left end need not be evaluated
    a, b = lo, hi
    while b - a > xtol:
        m = 0.5 * (a + b)
        op.set_alpha(m)
        r, z, rlo, rhi, _ = _radius(op, r_tol, 200_000, x0=z, target=1.0)
        if rlo > 1.0:
            a = m
        elif rhi < 1.0:
            b = m
        else:
            # bracket contains 1 to within r_tol: m is a root to working precision
            return m
    return 0.5 * (a + b)


def lambda0_curve(p: ModelParams, ls, grid: Grid, method: str = "noda"):
    ls = np.asarray(ls, dtype=float)
    return ls, np.array([lambda0(p, float(l), grid, method=method).lambda0 for l in ls])


@dataclass
class LstarResult:
    lstar: float
    bracket: tuple
    evaluations: list

    def to_dict(self) -> dict:
        return {
            "lstar": self.lstar,
            "bracket": list(self.bracket),
            "evaluations": [{"l": l, "lambda0": v} for l, v in self.evaluations],
        }


def bracket_lstar(p: ModelParams, grid: Grid, l_max: float = 10.0, tol: float = 1e-3,
                  max_expansions: int = 8, method: str = "noda") -> LstarResult:
    """Critical half-width ``l*`` with ``lambda0(l*) = 0``, with evaluation log."""
    if r0(p) <= 1.0:
        raise SubcriticalModel(f"R0 = {r0(p):.6g} <= 1: lambda0(l) < 0 for every l")
    evals = []

    def f(l):
        val = lambda0(p, l, grid, method=method).lambda0
        evals.append((float(l), float(val)))
        return val

    a = 2.0 * grid.dx
    fa = f(a)
    if fa >= 0:
        raise NoBracket(f"lambda0 is already nonnegative at l={a}")
    b = float(l_max)
    fb = f(b)
    k = 0
    while fb < 0:
        if k >= max_expansions:
            raise NoBracket(f"lambda0({b}) < 0 after {max_expansions} expansions")
        a, b = b, 2.0 * b
        fb = f(b)
        k += 1
    while b - a > tol:
        m = 0.5 * (a + b)
        if f(m) < 0:
            a = m
        else:
            b = m
    return LstarResult(0.5 * (a + b), (a, b), evals)


def find_lstar(p: ModelParams, grid: Grid, l_max: float = 10.0, tol: float = 1e-3, **kw) -> float:
    return bracket_lstar(p, grid, l_max=l_max, tol=tol, **kw).lstar
