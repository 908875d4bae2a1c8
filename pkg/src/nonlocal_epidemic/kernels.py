"""Dispersal kernel families.

Every kernel is a continuous, even, nonnegative density with ``j(0) > 0`` and
unit mass.  Besides the pointwise density each kernel exposes its tail mass
``tail(s) = int_s^inf j(z) dz``, which turns the double integral in the front
equations into a single weighted sum over the occupied interval.

Tent, cosine-bump and truncated-Gaussian kernels carry closed forms for both
normalization and tail.  The algebraic-tail kernel is normalized and tailed
from a cumulative table with linear interpolation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erf

from .errors import InvalidParam, NegativeArgument
from .report import ValidationReport

__all__ = [
    "KernelFamily",
    "Kernel",
    "make_kernel",
    "validate_kernel",
    "tail",
    "tent",
]


class KernelFamily(str, enum.Enum):
    TENT = "tent"
    COSINE_BUMP = "cosine"
    TRUNCATED_GAUSSIAN = "gaussian"
    ALGEBRAIC_TAIL = "algebraic"

    @classmethod
    def parse(cls, value) -> "KernelFamily":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {
            "tent": cls.TENT,
            "cosine": cls.COSINE_BUMP,
            "cosinebump": cls.COSINE_BUMP,
            "gaussian": cls.TRUNCATED_GAUSSIAN,
            "truncatedgaussian": cls.TRUNCATED_GAUSSIAN,
            "algebraic": cls.ALGEBRAIC_TAIL,
            "algebraictail": cls.ALGEBRAIC_TAIL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise InvalidParam(f"unknown kernel family {value!r}") from None


@dataclass(frozen=True)
class Kernel:
    """Immutable dispersal kernel.

    ``params`` is a sorted tuple of ``(name, value)`` pairs so kernels hash and
    compare by value.  ``normalization`` multiplies the unnormalized shape;
    replacing it (e.g. with :func:`dataclasses.replace`) yields a deliberately
    mis-normalized kernel, which :func:`validate_kernel` then flags.
    """

    family: KernelFamily
    params: tuple
    normalization: float
    support_radius: float
    _table_s: np.ndarray | None = field(default=None, compare=False, repr=False)
    _table_cum: np.ndarray | None = field(default=None, compare=False, repr=False)

    def param(self, name: str) -> float:
        return dict(self.params)[name]

    @property
    def tabulated(self) -> bool:
        return self._table_s is not None

    # -- unnormalized shapes -------------------------------------------------
    def _shape(self, a: np.ndarray) -> np.ndarray:
        """Unnormalized density at ``a = |x|``."""
        fam = self.family
        S = self.support_radius
        inside = a < S
        if fam is KernelFamily.TENT:
            out = S - a
        elif fam is KernelFamily.COSINE_BUMP:
            out = 1.0 + np.cos(np.pi * a / S)
        elif fam is KernelFamily.TRUNCATED_GAUSSIAN:
            s2 = 2.0 * self.param("sigma") ** 2
            out = np.exp(-a * a / s2) - math.exp(-S * S / s2)
        else:
            w = self.param("width")
            g = self.param("gamma")
            out = (1.0 + a / w) ** (-g) - (1.0 + S / w) ** (-g)
        return np.where(inside, out, 0.0)

    def _shape_tail(self, s: np.ndarray) -> np.ndarray:
        """Unnormalized ``int_s^S shape``, for ``0 <= s``."""
        fam = self.family
        S = self.support_radius
        sc = np.minimum(s, S)
        if fam is KernelFamily.TENT:
            out = 0.5 * (S - sc) ** 2
        elif fam is KernelFamily.COSINE_BUMP:
            out = (S - sc) - (S / np.pi) * np.sin(np.pi * sc / S)
        elif fam is KernelFamily.TRUNCATED_GAUSSIAN:
            sig = self.param("sigma")
            r = sig * math.sqrt(2.0)
            c = math.exp(-S * S / (2.0 * sig * sig))
            out = sig * math.sqrt(math.pi / 2.0) * (math.erf(S / r) - erf(sc / r)) - c * (S - sc)
        else:
            total = self._table_cum[-1]
            out = total - np.interp(sc, self._table_s, self._table_cum)
        return np.where(s >= S, 0.0, np.maximum(out, 0.0))

    # -- public evaluation ---------------------------------------------------
    def __call__(self, x):
        return self.density(x)

    def density(self, x):
        """Pointwise density ``j(x)``; scalar in, scalar out."""
        a = np.abs(np.asarray(x, dtype=float))
        out = self.normalization * self._shape(a)
        return float(out) if out.ndim == 0 else out

    def tail(self, s):
        """Tail mass ``int_s^inf j``; see :func:`tail`."""
        return tail(self, s)

    def describe(self) -> dict:
        d = {"family": self.family.value, **dict(self.params)}
        d["support_radius"] = self.support_radius
        return d


def tail(k: Kernel, s):
    """Return ``Psi(s) = int_s^inf j(z) dz`` for ``s >= 0``.

    ``Psi(0) = 1/2`` by symmetry, ``Psi`` is nonincreasing and vanishes for
    ``s >= support_radius``.
    """
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise NegativeArgument("tail argument must be nonnegative")
    out = k.normalization * k._shape_tail(arr)
    return float(out) if out.ndim == 0 else out


def _positive(name, value):
    if value is None:
        raise InvalidParam(f"missing kernel parameter {name!r}")
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise InvalidParam(f"kernel parameter {name!r} must be positive, got {value}")
    return value


def make_kernel(family, width=None, sigma=None, gamma=None, truncation=None, table_step=None) -> Kernel:
    """Build a unit-mass kernel of the given family.

    Parameters
    ----------
    family : KernelFamily or str
        ``tent``, ``cosine``, ``gaussian`` or ``algebraic``.
    width : float
        Half-width ``R`` for tent and cosine kernels; length scale of the
        algebraic kernel (default 1).
    sigma : float
        Gaussian shape parameter.
    gamma : float
        Algebraic decay exponent, must exceed 1.
    truncation : float
        Support radius for Gaussian (default ``6 sigma``) and algebraic
        (required) kernels.
    table_step : float
        Resolution of the cumulative table of the algebraic kernel.
    """
    fam = KernelFamily.parse(family)
    if fam in (KernelFamily.TENT, KernelFamily.COSINE_BUMP):
        R = _positive("width", width)
        if fam is KernelFamily.TENT:
            norm = 1.0 / (R * R)
        else:
            norm = 1.0 / (2.0 * R)
        return Kernel(fam, (("width", R),), norm, R)

    if fam is KernelFamily.TRUNCATED_GAUSSIAN:
        sig = _positive("sigma", sigma)
        L = 6.0 * sig if truncation is None else _positive("truncation", truncation)
        c = math.exp(-L * L / (2.0 * sig * sig))
        area = sig * math.sqrt(2.0 * math.pi) * math.erf(L / (sig * math.sqrt(2.0))) - 2.0 * L * c
        return Kernel(fam, (("sigma", sig), ("truncation", L)), 1.0 / area, L)

    g = _positive("gamma", gamma)
    if g <= 1.0:
        raise InvalidParam(f"algebraic kernel needs gamma > 1, got {g}")
    w = 1.0 if width is None else _positive("width", width)
    L = _positive("truncation", truncation)
    step = min(1e-3 * w, L / 1000.0) if table_step is None else _positive("table_step", table_step)
    n = int(math.ceil(L / step)) + 1
    s = np.linspace(0.0, L, n)
    f = (1.0 + s / w) ** (-g) - (1.0 + L / w) ** (-g)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(s))))
    norm = 1.0 / (2.0 * cum[-1])
    return Kernel(fam, (("gamma", g), ("table_step", step), ("truncation", L), ("width", w)),
                  norm, L, s, cum)


def tent(width=1.0) -> Kernel:
    return make_kernel(KernelFamily.TENT, width=width)


def validate_kernel(k: Kernel, grid_resolution: float = 1e-3, tol: float = 1e-8) -> ValidationReport:
    """Check assumption (J) numerically on a uniform sample grid.

    The integral check is a composite trapezoid rule over ``[-S, S]`` at
    ``grid_resolution``; its recorded value is the deficit ``1 - integral``.
    """
    if not tol > 0:
        raise InvalidParam("tol must be positive")
    S = k.support_radius
    n = max(int(round(2.0 * S / grid_resolution)), 2)
    n += n % 2  # keep x = 0 on the grid
    x = np.linspace(-S, S, n + 1)
    j = k.density(x)
    jm = k.density(-x)
    rep = ValidationReport(subject=f"kernel:{k.family.value}")
    asym = float(np.max(np.abs(j - jm)))
    rep.add("symmetry", asym <= tol, asym)
    jmin = float(np.min(j))
    rep.add("nonnegativity", jmin >= 0.0, jmin)
    j0 = k.density(0.0)
    rep.add("positive_at_origin", j0 > 0.0, j0)
    integral = float(np.trapezoid(j, x))
    deficit = 1.0 - integral
    rep.add("unit_mass", abs(deficit) <= tol, deficit, f"integral={integral:.12g}")
    return rep


def corrupted(k: Kernel, factor: float) -> Kernel:
    """Copy of ``k`` with its normalization scaled by ``factor`` (test helper)."""
    return replace(k, normalization=k.normalization * factor)
