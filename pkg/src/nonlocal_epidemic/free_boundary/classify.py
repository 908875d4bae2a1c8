"""Spreading / vanishing classification and the critical expansion rate.

Spreading is declared once the occupied width exceeds ``2 l* + dx``: a
vanishing solution never leaves an interval of width ``2 l*``.  Vanishing is
declared when, over a trailing window, both the front expansion rate and the
field amplitudes are negligible; the principal eigenvalue of the final
interval is then checked to be nonpositive.

An optional third rule certifies vanishing early by the exponentially
decaying upper solution built on a slightly larger interval
``[-h1, h1]`` with ``lambda0(h1) < 0``: if the current state lies below
``M (theta1, theta2)`` the fronts can never separate by more than ``2 h1``.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..discrete_ops import Grid, build_grid
from ..eigen import lambda0_interval
from ..errors import DegenerateRegime, InconsistentMonotonicity, MissingLstar
from ..model import InitialData, ModelParams, r0
from .evolve import RunResult, evolve, suggest_dt

__all__ = [
    "Tag", "Trigger", "Classification", "Monitor", "VanishingCertificate",
    "classify", "classify_params", "find_mustar", "MuStarResult", "LedgerEntry",
]

log = logging.getLogger(__name__)

EIGEN_CHECK_TOL = 1e-6


class Tag(str, enum.Enum):
    SPREADING = "Spreading"
    VANISHING = "Vanishing"
    UNDECIDED = "Undecided"


class Trigger(str, enum.Enum):
    WIDTH_EXCEEDS_2LSTAR = "WidthExceeds2Lstar"
    FRONTS_STALLED_AND_MASS_DECAYED = "FrontsStalledAndMassDecayed"
    UPPER_SOLUTION_CERTIFICATE = "UpperSolutionCertificate"
    HORIZON_REACHED = "HorizonReached"


@dataclass
class Classification:
    tag: Tag
    trigger: Trigger
    t: float
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"tag": self.tag.value, "trigger": self.trigger.value, "t": self.t, "evidence": self.evidence}


class VanishingCertificate:
    """Upper-solution test for eventual vanishing.

    For a state on ``[g, h]`` with half-width ``h0 = (h - g)/2 < h1 < l*`` the
    pair ``M e^{sigma t} (theta1, theta2)`` on fronts
    ``+-(h1 - (h1 - h0) e^{sigma t})`` (centered at the midpoint) is an upper
    solution when ``sigma = lambda0(h1)/2`` and
    ``M = -sigma (h1 - h0) / (M0 mu (1 + rho))``, ``M0`` being the larger of
    the integrals of ``theta1`` and ``theta2``.  The test passes when
    ``u <= safety * M theta1`` and ``v <= safety * M theta2`` on the slice.
    """

    def __init__(self, p: ModelParams, grid: Grid, lstar: float, safety: float = 0.5, levels: int = 6):
        self.p = p
        self.grid = grid
        self.lstar = lstar
        self.safety = safety
        self.levels = levels
        self._cache = {}

    def _eigen(self, h1: float):
        key = round(h1 / self.grid.dx)
        if key not in self._cache:
            h1 = key * self.grid.dx
            ev = lambda0_interval(self.p, -h1, h1, self.grid)
            M0 = max(float(np.dot(ev.weights, ev.theta1)), float(np.dot(ev.weights, ev.theta2)))
            self._cache[key] = (h1, ev, M0)
        return self._cache[key]

    def candidates(self, half: float):
        """Lattice-aligned ``h1`` values in ``(half, l*)``."""
        dx = self.grid.dx
        out = []
        for k in range(1, self.levels + 1):
            h1 = half + (self.lstar - half) * (1.0 - 2.0 ** (-k))
            h1 = math.floor(h1 / dx) * dx
            if half < h1 < self.lstar and (not out or h1 > out[-1]):
                out.append(h1)
        return out

    def check(self, g: float, h: float, x: np.ndarray, u: np.ndarray, v: np.ndarray):
        """Return the certifying ``h1`` (and margin) or ``None``."""
        half = 0.5 * (h - g)
        if half >= self.lstar or x.size == 0:
            return None
        c = 0.5 * (g + h)
        mu, rho = self.p.mu, self.p.rho
        for h1 in self.candidates(half):
            h1, ev, M0 = self._eigen(h1)
            lam = ev.lambda0
            if not lam < 0:
                continue
            sigma = 0.5 * lam
            M = -sigma * (h1 - half) / (M0 * mu * (1.0 + rho))
            xs = x - c
            t1 = np.interp(xs, ev.x, ev.theta1)
            t2 = np.interp(xs, ev.x, ev.theta2)
            ratio = max(float(np.max(u / t1)), float(np.max(v / t2)))
            if ratio <= self.safety * M:
                return {"h1": h1, "lambda0_h1": lam, "M": M, "ratio": ratio}
        return None


class Monitor:
    """Streaming classifier for :func:`evolve`.

    Returns a :class:`Classification` as soon as a rule fires.  With a
    certificate attached, ``evolve`` also hands over the fields every
    ``field_every`` steps through :meth:`field_check`.
    """

    def __init__(self, p: ModelParams, grid: Grid, lstar: float | None, eps_mass: float,
                 eps_front: float = 1e-6, window: float = 10.0, dt: float = 0.01,
                 certificate: VanishingCertificate | None = None, certify_every: float = 1.0):
        self.certificate = certificate
        self.field_every = max(1, int(round(certify_every / dt))) if certificate is not None else 0
        self.limit = math.inf if lstar is None else 2.0 * lstar + grid.dx
        self.eps_mass = eps_mass
        self.eps_front = eps_front
        self.window = window
        self.nwin = max(1, int(round(window / dt)))
        self._quiet = 0
        self._max_rate = 0.0
        self._max_sup = 0.0

    def __call__(self, t, g, h, gp, hp, su, sv):
        if h - g > self.limit:
            return Classification(Tag.SPREADING, Trigger.WIDTH_EXCEEDS_2LSTAR, t,
                                  {"width": h - g, "threshold": self.limit})
        rate = hp - gp
        sup = su + sv
        if rate < self.eps_front and sup < self.eps_mass:
            self._quiet += 1
            self._max_rate = max(self._max_rate, rate)
            self._max_sup = max(self._max_sup, sup)
        else:
            self._quiet = 0
            self._max_rate = 0.0
            self._max_sup = 0.0
        if self._quiet > self.nwin:
            return Classification(Tag.VANISHING, Trigger.FRONTS_STALLED_AND_MASS_DECAYED, t,
                                  {"window": self.window, "max_front_rate": self._max_rate,
                                   "max_sup": self._max_sup, "eps_front": self.eps_front,
                                   "eps_mass": self.eps_mass, "width": h - g})
        return None

    def field_check(self, t, g, h, x, u, v):
        ev = self.certificate.check(g, h, x, u, v)
        if ev is None:
            return None
        ev["width"] = h - g
        return Classification(Tag.VANISHING, Trigger.UPPER_SOLUTION_CERTIFICATE, t, ev)


def _default_eps_mass(init_sups) -> float:
    return 1e-8 * float(sum(init_sups))


def _need_lstar(p: ModelParams, lstar):
    if lstar is None and r0(p) > 1:
        raise MissingLstar("R0 > 1 requires the critical half-width lstar")


def _eigen_check(p: ModelParams, grid: Grid, g: float, h: float, tol: float = EIGEN_CHECK_TOL) -> dict:
    if h - g < 2 * grid.dx:
        return {"lambda0_final": None, "lambda0_ok": True, "note": "interval below two cells"}
    lam = lambda0_interval(p, g, h, grid).lambda0
    return {"lambda0_final": lam, "lambda0_ok": bool(lam <= tol)}


def classify(run: RunResult, lstar: float | None, eps_mass: float | None = None, eps_front: float = 1e-6,
             window: float = 10.0, eigen_check: bool = True) -> Classification:
    """Classify a finished run from its front and amplitude series.

    Parameters
    ----------
    run : RunResult
        Output of :func:`evolve`.
    lstar : float or None
        Critical half-width; required when ``R0 > 1``.
    eps_mass : float, optional
        Amplitude threshold on ``sup u + sup v`` (default ``1e-8`` times
        the initial value).
    eps_front : float
        Threshold on the expansion rate ``h' - g'``.
    window : float
        Length of the trailing window in time units.
    eigen_check : bool
        On vanishing, compute ``lambda0`` of the final interval and record
        whether it is nonpositive.
    """
    p = run.p
    _need_lstar(p, lstar)
    if eps_mass is None:
        eps_mass = _default_eps_mass(run.sups[0])
    mon = Monitor(p, run.grid, lstar, eps_mass, eps_front, window, run.dt)
    t, g, h, gp, hp = (run.fronts[:, i] for i in range(5))
    su, sv = run.sups[:, 0], run.sups[:, 1]
    for k in range(t.size):
        c = mon(t[k], g[k], h[k], gp[k], hp[k], su[k], sv[k])
        if c is not None:
            break
    else:
        c = Classification(Tag.UNDECIDED, Trigger.HORIZON_REACHED, float(t[-1]),
                           {"width": float(h[-1] - g[-1]),
                            "sup": float(su[-1] + sv[-1]),
                            "front_rate": float(hp[-1] - gp[-1])})
    if run.decision is not None and run.decision.trigger is Trigger.UPPER_SOLUTION_CERTIFICATE \
            and c.tag is Tag.UNDECIDED:
        c = run.decision
    if c.tag is Tag.VANISHING and eigen_check:
        k = int(np.searchsorted(t, c.t))
        c.evidence.update(_eigen_check(p, run.grid, float(g[k]), float(h[k])))
    return c


def classify_params(p: ModelParams, init: InitialData, lstar: float | None, horizon: float,
                    grid: Grid | None = None, dt: float | None = None, certify: bool = False,
                    certify_every: float = 1.0, eps_mass: float | None = None, eps_front: float = 1e-6,
                    window: float = 10.0, stride: int | None = None):
    """Evolve with early stopping and return ``(run, classification)``.

    With ``certify=True`` the upper-solution certificate is tried every
    ``certify_every`` time units while the width is below ``2 l*``.
    """
    grid = build_grid(0.02) if grid is None else grid
    _need_lstar(p, lstar)
    dt = suggest_dt(p, init, grid) if dt is None else dt
    eps_mass = _default_eps_mass(init.sup_norms()) if eps_mass is None else eps_mass
    cert = VanishingCertificate(p, grid, lstar) if (certify and lstar is not None and r0(p) > 1) else None
    mon = Monitor(p, grid, lstar, eps_mass, eps_front, window, dt, cert, certify_every)
    run = evolve(p, init, dt, horizon, stride=stride, grid=grid, monitor=mon)
    return run, classify(run, lstar, eps_mass, eps_front, window)


@dataclass
class LedgerEntry:
    mu: float
    tag: str
    trigger: str
    t: float
    dt: float

    def to_dict(self) -> dict:
        return {"mu": self.mu, "tag": self.tag, "trigger": self.trigger, "t": self.t, "dt": self.dt}


@dataclass
class MuStarResult:
    mu_star: float
    bracket: tuple
    ledger: list
    undecided: list

    def to_dict(self) -> dict:
        return {"mu_star": self.mu_star, "bracket": list(self.bracket),
                "ledger": [e.to_dict() for e in self.ledger], "undecided": list(self.undecided)}


def find_mustar(p: ModelParams, init: InitialData, mu_lo: float, mu_hi: float, horizon: float,
                tol: float, lstar: float, grid: Grid | None = None, rel_tol: bool = True,
                certify: bool = True, dt: float | None = None, dt_scale: float = 1.0,
                **kw) -> MuStarResult:
    """Bisect the expansion coefficient for the spreading / vanishing threshold.

    ``tol`` is the terminal bracket width, relative to the bracket midpoint
    when ``rel_tol``.  Each probe uses ``dt_scale`` times the suggested (or
    given) step; ``certify`` enables the early vanishing certificate.  Undecided probes are recorded; they are treated as
    vanishing for the purpose of the bracket update (a run that has not
    spread by the horizon) and reported in ``undecided``.

    Raises
    ------
    DegenerateRegime
        If ``h0 >= l*`` (every ``mu`` spreads) or ``R0 <= 1`` (none does).
    InconsistentMonotonicity
        If a smaller ``mu`` spreads while a larger one vanishes.
    """
    grid = build_grid(0.02) if grid is None else grid
    if r0(p) <= 1:
        raise DegenerateRegime("R0 <= 1: vanishing for every mu")
    if init.h0 >= lstar:
        raise DegenerateRegime(f"h0={init.h0:.6g} >= l*={lstar:.6g}: spreading for every mu")
    ledger, undecided = [], []

    def probe(mu):
        q = p.with_(mu=mu)
        step = dt_scale * (suggest_dt(q, init, grid) if dt is None else dt)
        _, c = classify_params(q, init, lstar, horizon, grid=grid, dt=step, certify=certify, **kw)
        ledger.append(LedgerEntry(mu, c.tag.value, c.trigger.value, c.t, step))
        if c.tag is Tag.UNDECIDED:
            undecided.append(mu)
        log.info("mu=%.6g -> %s (%s) at t=%.4g", mu, c.tag.value, c.trigger.value, c.t)
        return c.tag is Tag.SPREADING

    def check_order():
        spread = [e.mu for e in ledger if e.tag == Tag.SPREADING.value]
        vanish = [e.mu for e in ledger if e.tag == Tag.VANISHING.value]
        if spread and vanish and min(spread) < max(vanish):
            raise InconsistentMonotonicity(
                f"mu={min(spread):.6g} spreads but mu={max(vanish):.6g} vanishes; "
                "increase the horizon or reduce dt")

    lo, hi = float(mu_lo), float(mu_hi)
    if probe(lo):
        check_order()
        raise InconsistentMonotonicity(f"lower end mu={lo:.6g} already spreads")
    if not probe(hi):
        raise InconsistentMonotonicity(f"upper end mu={hi:.6g} does not spread by the horizon")
    while True:
        mid = math.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        width = hi - lo
        if width <= (tol * 0.5 * (lo + hi) if rel_tol else tol):
            break
        if probe(mid):
            hi = mid
        else:
            lo = mid
        check_order()
    return MuStarResult(0.5 * (lo + hi), (lo, hi), ledger, undecided)
