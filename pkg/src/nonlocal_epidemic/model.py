"""Model parameters, reaction term, thresholds and the homogeneous ODE."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import InvalidParam, StepTooLarge
from .kernels import Kernel, tent
from .report import ValidationReport

__all__ = [
    "Reaction",
    "Monod",
    "ModelParams",
    "InitialData",
    "r0",
    "equilibrium",
    "validate_reaction",
    "ode_trajectory",
    "canonical_params",
    "bounds_k1k2",
]


class Reaction:
    """Human infection rate ``G``.  Subclasses provide ``G``, ``dG`` and ``describe``.

    The theory needs G(0) = 0, G' > 0 and G(z)/z strictly decreasing with a
    limit below a11*a22/a12.  ``limit_ratio`` is that limit of G(z)/z.
    """

    limit_ratio = 0.0

    def G(self, z):
        raise NotImplementedError

    def dG(self, z):
        raise NotImplementedError

    @property
    def slope0(self) -> float:
        return float(self.dG(0.0))

    def __call__(self, z):
        return self.G(z)

    def describe(self) -> dict:
        return {"family": type(self).__name__.lower()}


@dataclass(frozen=True)
class Monod(Reaction):
    """``G(z) = beta z / (1 + z/kappa)``, so ``G'(0) = beta``."""

    beta: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("beta", "kappa"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidParam(f"Monod {name} must be positive, got {v}")

    def G(self, z):
        return self.beta * z / (1.0 + z / self.kappa)

    def dG(self, z):
        return self.beta / (1.0 + z / self.kappa) ** 2

    def inverse_ratio(self, c: float) -> float:
        """Solve ``G(u)/u = c`` for ``u > 0`` (requires ``0 < c < beta``)."""
        return self.kappa * (self.beta / c - 1.0)

    def describe(self) -> dict:
        return {"family": "monod", "beta": self.beta, "kappa": self.kappa}


@dataclass(frozen=True)
class ModelParams:
    d1: float = 1.0
    d2: float = 1.0
    a11: float = 1.0
    a12: float = 2.0
    a22: float = 1.0
    mu: float = 1.0
    rho: float = 1.0
    J1: Kernel = field(default_factory=tent)
    J2: Kernel = field(default_factory=tent)
    K: Kernel = field(default_factory=tent)
    reaction: Reaction = field(default_factory=Monod)
    allow_zero_mu: bool = field(default=False, repr=False)

    def __post_init__(self):
        for name in ("d1", "d2", "a11", "a12", "a22"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidParam(f"{name} must be positive, got {v}")
        if not (self.mu > 0 or (self.allow_zero_mu and self.mu == 0)):
            raise InvalidParam(f"mu must be positive, got {self.mu}")
        if not self.rho >= 0:
            raise InvalidParam(f"rho must be nonnegative, got {self.rho}")

    @property
    def beta(self) -> float:
        """``G'(0)``."""
        return self.reaction.slope0

    @property
    def c1(self) -> float:
        return self.d1 + self.a11

    @property
    def c2(self) -> float:
        return self.d2 + self.a22

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def describe(self) -> dict:
        return {
            "d1": self.d1, "d2": self.d2, "a11": self.a11, "a12": self.a12,
            "a22": self.a22, "mu": self.mu, "rho": self.rho,
            "J1": self.J1.describe(), "J2": self.J2.describe(), "K": self.K.describe(),
            "reaction": self.reaction.describe(),
        }


def canonical_params(name: str = "P1", **overrides) -> ModelParams:
    """The two reference parameter sets: P1 (R0 = 2) and P2 (R0 = 1/2)."""
    name = name.upper()
    if name == "P1":
        base = dict(a12=2.0)
    elif name == "P2":
        base = dict(a12=0.5)
    else:
        raise InvalidParam(f"unknown canonical set {name!r}")
    base.update(overrides)
    return ModelParams(**base)


def r0(p: ModelParams) -> float:
    """Basic reproduction number ``a12 G'(0) / (a11 a22)``."""
    return p.a12 * p.beta / (p.a11 * p.a22)


def equilibrium(p: ModelParams):
    """Positive equilibrium ``(u*, v*)`` when ``R0 > 1``, else ``None``."""
    if r0(p) <= 1.0:
        return None
    target = p.a11 * p.a22 / p.a12
    rx = p.reaction
    if hasattr(rx, "inverse_ratio"):
        ustar = rx.inverse_ratio(target)
    else:
        from scipy.optimize import brentq

        hi = 1.0
        while rx.G(hi) / hi >= target:
            hi *= 2.0
        ustar = brentq(lambda z: rx.G(z) / z - target, hi * 1e-12, hi, xtol=1e-15, rtol=1e-15)
    return ustar, p.a11 / p.a12 * ustar


def validate_reaction(p: ModelParams, z_samples) -> ValidationReport:
    z = np.sort(np.asarray(z_samples, dtype=float))
    if z.size == 0:
        raise InvalidParam("z_samples must be nonempty")
    rx = p.reaction
    rep = ValidationReport(subject="reaction")
    g0 = float(rx.G(0.0))
    rep.add("G(0)=0", g0 == 0.0, g0)
    dg = np.array([rx.dG(zi) for zi in np.concatenate(([0.0], z))])
    rep.add("G'>0", bool(np.all(dg > 0)), float(dg.min()))
    ratio = np.array([rx.G(zi) / zi for zi in z])
    steps = np.diff(ratio)
    worst = float(steps.max()) if steps.size else -math.inf
    rep.add("G(z)/z strictly decreasing", worst < 0, worst)
    bound = p.a11 * p.a22 / p.a12
    rep.add("G(z_max)/z_max < a11 a22/a12", ratio[-1] < bound, float(ratio[-1]), f"bound={bound:.6g}")
    rep.add("lim G(z)/z < a11 a22/a12", rx.limit_ratio < bound, rx.limit_ratio)
    return rep


def _ode_rhs(p: ModelParams, y):
    u, v = y
    return np.array([-p.a11 * u + p.a12 * v, -p.a22 * v + p.reaction.G(u)])


def ode_trajectory(p: ModelParams, u0: float, v0: float, dt: float, T: float, stride: int = 1):
    """Classical RK4 for ``u' = -a11 u + a12 v``, ``v' = -a22 v + G(u)``.

    Returns ``(t, u, v)`` arrays sampled every ``stride`` steps; the final
    time is always included.
    """
    if u0 < 0 or v0 < 0:
        raise InvalidParam("initial values must be nonnegative")
    if not dt > 0 or not T > 0:
        raise InvalidParam("dt and T must be positive")
    if dt * max(p.a11, p.a22) >= 1.0:
        raise StepTooLarge(f"dt*max(a11,a22) = {dt * max(p.a11, p.a22):.3g} must be < 1")
    nsteps = int(math.ceil(T / dt - 1e-9))
    h = T / nsteps
    y = np.array([u0, v0], dtype=float)
    ts, us, vs = [0.0], [y[0]], [y[1]]
    for i in range(1, nsteps + 1):
        k1 = _ode_rhs(p, y)
        k2 = _ode_rhs(p, y + 0.5 * h * k1)
        k3 = _ode_rhs(p, y + 0.5 * h * k2)
        k4 = _ode_rhs(p, y + h * k3)
        y = np.maximum(y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), 0.0)
        if i % stride == 0 or i == nsteps:
            ts.append(i * h)
            us.append(y[0])
            vs.append(y[1])
    return np.array(ts), np.array(us), np.array(vs)


@dataclass
class InitialData:
    """Initial half-width ``h0`` and profiles on ``[-h0, h0]``.

    ``u0`` and ``v0`` are vectorized callables; they must vanish at ``+-h0``
    and be positive inside.  Use :meth:`tent`, :meth:`cosine` or
    :meth:`plateau` for the built-in shapes.
    """

    h0: float
    u0: Callable
    v0: Callable
    shape: str = "custom"
    amplitude_u: float = 1.0
    amplitude_v: float = 1.0

    def __post_init__(self):
        if not self.h0 > 0:
            raise InvalidParam("h0 must be positive")

    @classmethod
    def tent(cls, h0, amplitude_u=1.0, amplitude_v=1.0):
        def prof(a):
            return lambda x: a * np.maximum(h0 - np.abs(np.asarray(x, float)), 0.0) / h0
        return cls(h0, prof(amplitude_u), prof(amplitude_v), "tent", amplitude_u, amplitude_v)

    @classmethod
    def cosine(cls, h0, amplitude_u=1.0, amplitude_v=1.0):
        def prof(a):
            def f(x):
                x = np.asarray(x, float)
                return np.where(np.abs(x) < h0, 0.5 * a * (1.0 + np.cos(np.pi * x / h0)), 0.0)
            return f
        return cls(h0, prof(amplitude_u), prof(amplitude_v), "cosine", amplitude_u, amplitude_v)

    @classmethod
    def plateau(cls, h0, amplitude_u=1.0, amplitude_v=1.0, ramp=0.25):
        """Flat top with linear ramps of relative length ``ramp`` (smoothed step)."""
        if not 0 < ramp <= 1:
            raise InvalidParam("ramp must lie in (0, 1]")
        def prof(a):
            return lambda x: a * np.clip((h0 - np.abs(np.asarray(x, float))) / (ramp * h0), 0.0, 1.0)
        return cls(h0, prof(amplitude_u), prof(amplitude_v), "plateau", amplitude_u, amplitude_v)

    @classmethod
    def from_spec(cls, shape, h0, amplitude_u=1.0, amplitude_v=1.0):
        makers = {"tent": cls.tent, "cosine": cls.cosine, "plateau": cls.plateau}
        try:
            return makers[shape](h0, amplitude_u, amplitude_v)
        except KeyError:
            raise InvalidParam(f"unknown initial shape {shape!r}") from None

    def scaled(self, factor: float) -> "InitialData":
        u0, v0 = self.u0, self.v0
        return InitialData(self.h0, lambda x: factor * u0(x), lambda x: factor * v0(x),
                           self.shape, factor * self.amplitude_u, factor * self.amplitude_v)

    def sample(self, x):
        """Profiles at points ``x`` (zero outside the open interval)."""
        x = np.asarray(x, float)
        inside = np.abs(x) < self.h0
        u = np.where(inside, self.u0(x), 0.0)
        v = np.where(inside, self.v0(x), 0.0)
        if np.any(u[inside] <= 0) or np.any(v[inside] <= 0):
            raise InvalidParam("initial profiles must be positive inside (-h0, h0)")
        return u, v

    def sup_norms(self, n: int = 4001):
        x = np.linspace(-self.h0, self.h0, n)
        return float(np.max(self.u0(x))), float(np.max(self.v0(x)))

    def check_boundary(self) -> bool:
        e = np.array([-self.h0, self.h0])
        return bool(np.all(self.u0(e) == 0) and np.all(self.v0(e) == 0))

    def describe(self) -> dict:
        return {"shape": self.shape, "h0": self.h0,
                "amplitude_u": self.amplitude_u, "amplitude_v": self.amplitude_v}


def bounds_k1k2(p: ModelParams, u_sup: float, v_sup: float):
    """A priori bounds ``K1, K2`` with ``-a11 K1 + a12 K2 <= 0``.

    ``K1 = max(u*, |u0|, (a12/a11)|v0|)`` and ``K2 = max(|v0|, G(K1)/a22)``,
    with ``u* = 0`` when ``R0 <= 1``.
    """
    eq = equilibrium(p)
    ustar = 0.0 if eq is None else eq[0]
    K1 = max(ustar, u_sup, p.a12 / p.a11 * v_sup)
    K2 = max(v_sup, float(p.reaction.G(K1)) / p.a22)
    return K1, K2
