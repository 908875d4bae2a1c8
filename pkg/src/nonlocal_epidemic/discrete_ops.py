"""Lattice, clipped-interval quadrature and convolution operators.

All solvers share one global lattice ``x_j = j*dx``.  An interval ``(g, h)``
is represented by the lattice nodes strictly inside it plus two partial end
cells.  Two quadratures live on such a slice:

* open: unknowns on the interior nodes only, the field is taken as zero at
  ``g`` and ``h`` and linear across the end cells (free-boundary problems);
* closed: the endpoints ``g`` and ``h`` are extra quadrature nodes carrying
  their own values (fixed-interval and eigenvalue problems).

Both are composite trapezoid rules with positive weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import EmptyDomain, InvalidParam, ShapeMismatch
from .kernels import Kernel
from .model import ModelParams

__all__ = [
    "Grid",
    "DomainSlice",
    "FieldPair",
    "build_grid",
    "slice_domain",
    "quadrature",
    "apply_conv",
    "conv_matrix",
    "boundary_flux",
    "kernel_stencil",
]


@dataclass(frozen=True)
class Grid:
    dx: float

    def node(self, j):
        return np.asarray(j) * self.dx if np.ndim(j) else j * self.dx

    def nodes(self, j_lo: int, j_hi: int) -> np.ndarray:
        return np.arange(j_lo, j_hi + 1) * self.dx


def build_grid(dx: float) -> Grid:
    if not (dx > 0 and math.isfinite(dx)):
        raise InvalidParam(f"dx must be positive, got {dx}")
    return Grid(float(dx))


@dataclass(frozen=True)
class DomainSlice:
    grid: Grid
    g: float
    h: float
    j_lo: int
    j_hi: int
    g_frac: float
    h_frac: float

    @property
    def n(self) -> int:
        return max(self.j_hi - self.j_lo + 1, 0)

    @property
    def degenerate(self) -> bool:
        return self.n == 0

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes(self.j_lo, self.j_hi)

    @property
    def width(self) -> float:
        return self.h - self.g


def slice_domain(grid: Grid, g: float, h: float, allow_empty: bool = False) -> DomainSlice:
    """Interior lattice nodes of ``(g, h)`` and the partial end cells.

    Raises :class:`EmptyDomain` when ``h - g < dx`` unless ``allow_empty``.
    """
    if not h > g:
        raise InvalidParam(f"need g < h, got g={g}, h={h}")
    dx = grid.dx
    if h - g < dx and not allow_empty:
        raise EmptyDomain(f"interval width {h - g:.3g} is below dx={dx:.3g}")
    j_lo = math.floor(g / dx) + 1
    while (j_lo - 1) * dx > g:
        j_lo -= 1
    while j_lo * dx <= g:
        j_lo += 1
    j_hi = math.ceil(h / dx) - 1
    while (j_hi + 1) * dx < h:
        j_hi += 1
    while j_hi * dx >= h:
        j_hi -= 1
    return DomainSlice(grid, float(g), float(h), j_lo, j_hi, j_lo * dx - g, h - j_hi * dx)


def quadrature(dom: DomainSlice, closed: bool = False):
    """Nodes and trapezoid weights for ``int_g^h f``.

    Open slices return the interior nodes only; closed slices prepend ``g``
    and append ``h``.
    """
    dx = dom.grid.dx
    n = dom.n
    if n == 0:
        if closed:
            return np.array([dom.g, dom.h]), np.full(2, 0.5 * dom.width)
        return np.empty(0), np.empty(0)
    w = np.full(n, dx)
    if n == 1:
        w[0] = 0.5 * (dom.g_frac + dom.h_frac)
    else:
        w[0] = 0.5 * (dom.g_frac + dx)
        w[-1] = 0.5 * (dx + dom.h_frac)
    x = dom.x
    if closed:
        x = np.concatenate(([dom.g], x, [dom.h]))
        w = np.concatenate(([0.5 * dom.g_frac], w, [0.5 * dom.h_frac]))
    return x, w


def kernel_stencil(kernel: Kernel, dx: float) -> np.ndarray:
    """Kernel values ``j(m dx)`` for ``m = -b..b`` covering the support."""
    b = int(math.floor(kernel.support_radius / dx))
    m = np.arange(-b, b + 1)
    return kernel.density(m * dx)


def apply_conv(kernel: Kernel, grid: Grid, dom: DomainSlice, f, closed: bool = False, stencil=None):
    """Trapezoid approximation of ``int_g^h j(x_i - y) f(y) dy`` at every node.

    ``f`` lives on the open node set (length ``dom.n``) or, with
    ``closed=True``, on the closed node set (length ``dom.n + 2``).  The
    interior part is a banded direct sum over the kernel support.
    """
    f = np.asarray(f, dtype=float)
    n = dom.n
    expected = n + 2 if closed else n
    if f.shape != (expected,):
        raise ShapeMismatch(f"field has shape {f.shape}, slice needs ({expected},)")
    x, w = quadrature(dom, closed)
    kv = kernel_stencil(kernel, grid.dx) if stencil is None else stencil
    b = (kv.size - 1) // 2
    if not closed:
        if n == 0:
            return np.empty(0)
        return np.convolve(w * f, kv)[b:b + n]
    wf = w * f
    out = np.empty(n + 2)
    if n:
        xi = x[1:-1]
        out[1:-1] = (np.convolve(wf[1:-1], kv)[b:b + n]
                     + kernel.density(xi - dom.g) * wf[0]
                     + kernel.density(xi - dom.h) * wf[-1])
    out[0] = np.dot(kernel.density(dom.g - x), wf)
    out[-1] = np.dot(kernel.density(dom.h - x), wf)
    return out


def conv_matrix(kernel: Kernel, grid: Grid, dom: DomainSlice, closed: bool = False, dense: bool | None = None):
    """Assemble the matrix ``C[i, k] = j(x_i - x_k) w_k`` of :func:`apply_conv`.

    Returns a CSR matrix when the kernel band is narrow relative to the
    slice, otherwise a dense array (``dense`` forces either choice).
    """
    x, w = quadrature(dom, closed)
    N = x.size
    B = int(math.floor(kernel.support_radius / grid.dx)) + 2
    if dense is None:
        dense = 2 * B + 1 >= N // 2
    if dense:
        return kernel.density(x[:, None] - x[None, :]) * w[None, :]
    offsets, diags = [], []
    for m in range(-min(B, N - 1), min(B, N - 1) + 1):
        if m >= 0:
            vals = kernel.density(x[:N - m] - x[m:]) * w[m:]
        else:
            vals = kernel.density(x[-m:] - x[:N + m]) * w[:N + m]
        if np.any(vals):
            offsets.append(m)
            diags.append(vals)
    return sp.diags(diags, offsets, shape=(N, N), format="csr")


@dataclass
class FieldPair:
    """Agent density ``u`` and infective-human density ``v`` on a slice."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.v.shape:
            raise ShapeMismatch("u and v must have the same shape")


def boundary_flux(p: ModelParams, grid: Grid, dom: DomainSlice, fields: FieldPair):
    """Front velocities ``(g', h')`` from the outward tail-weighted mass.

    ``h' = mu sum_i w_i [Psi1(h - x_i) u_i + rho Psi2(h - x_i) v_i]`` and the
    mirrored expression with an overall minus sign for ``g'``.
    """
    u, v = fields.u, fields.v
    if u.shape != (dom.n,):
        raise ShapeMismatch(f"fields have shape {u.shape}, slice needs ({dom.n},)")
    if dom.n == 0:
        return 0.0, 0.0
    x, w = quadrature(dom)
    right = p.J1.tail(dom.h - x) * u
    left = p.J1.tail(x - dom.g) * u
    if p.rho:
        right = right + p.rho * p.J2.tail(dom.h - x) * v
        left = left + p.rho * p.J2.tail(x - dom.g) * v
    return -p.mu * float(np.dot(w, left)), p.mu * float(np.dot(w, right))
