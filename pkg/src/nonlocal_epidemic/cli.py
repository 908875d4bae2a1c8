"""Command-line interface.

Exit status is 0 on success, 1 on a domain error (reported as JSON on
stdout) and 2 on a usage or configuration error.  Relative output paths are
resolved against ``$NONLOCAL_EPIDEMIC_OUTDIR`` when it is set.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import eigen as eig
from .config import RunConfig, parse_config
from .discrete_ops import build_grid
from .errors import ConfigError, NonlocalEpidemicError
from .fixed_domain import evolve_fixed, steady_state
from .free_boundary import (classify, classify_params, comparison_check, delta_bounds, evolve, find_mustar,
                            mass_diagnostic, picard_reference, suggest_dt)
from .kernels import validate_kernel
from .model import bounds_k1k2, equilibrium, ode_trajectory, r0, validate_reaction

__all__ = ["main", "build_parser", "SCHEMA_VERSION", "OUTDIR_ENV"]

SCHEMA_VERSION = 1
OUTDIR_ENV = "NONLOCAL_EPIDEMIC_OUTDIR"
RESULTS_HEADER = ["config_hash", "mu", "classification", "trigger", "decision_time"]


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_jsonable(v) for v in o.tolist()]
    if isinstance(o, (np.floating, float)):
        f = float(o)
        return f if math.isfinite(f) else None
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if hasattr(o, "value") and isinstance(getattr(o, "value"), str):
        return o.value
    return o


def _dump(obj) -> str:
    return json.dumps(_jsonable({"schema_version": SCHEMA_VERSION, **obj}), indent=2, sort_keys=True)


def _out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTDIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def _load(args) -> RunConfig:
    if getattr(args, "config", None):
        return parse_config(args.config)
    from .config import parse_config_string

    return parse_config_string("", "<defaults>")


def _grid(cfg, args):
    dx = getattr(args, "dx", None) or cfg.get("numerics", "dx")
    return build_grid(dx)


def _lstar(cfg, grid):
    p = cfg.params
    if r0(p) <= 1:
        return None
    return eig.find_lstar(p, grid, l_max=cfg.get("numerics", "l_max"), tol=cfg.get("numerics", "lstar_tol"))


def _threshold_summary(cfg):
    p = cfg.params
    eq = equilibrium(p)
    return {"R0": r0(p), "u_star": eq[0] if eq else 0.0, "v_star": eq[1] if eq else 0.0,
            "lambda_infinity": eig.lambda_infinity(p)}


# -- commands ---------------------------------------------------------------

def cmd_validate(cfg, args):
    p = cfg.params
    reports = [validate_kernel(k) for k in (p.J1, p.J2, p.K)]
    eq = equilibrium(p)
    zmax = 10.0 * (eq[0] if eq else 1.0)
    reports.append(validate_reaction(p, np.linspace(1e-6, zmax, 200)))
    ok = all(r.passed for r in reports) and cfg.init.check_boundary()
    print(_dump({"command": "validate", "passed": ok, "initial_boundary_zero": cfg.init.check_boundary(),
                 "reports": [r.to_dict() for r in reports], "config": cfg.echo()}))
    return 0 if ok else 1


def cmd_ode(cfg, args):
    o = cfg.sections["ode"]
    t, u, v = ode_trajectory(cfg.params, o["u0"], o["v0"], o["dt"], args.T or o["T"])
    if args.out:
        _write_csv(_out_path(args.out + "_ode.csv"), ["t", "u", "v"], zip(t, u, v))
    print(_dump({"command": "ode", **_threshold_summary(cfg), "final": [u[-1], v[-1]], "T": t[-1]}))
    return 0


def cmd_eigen(cfg, args):
    p = cfg.params
    grid = _grid(cfg, args)
    method = cfg.get("numerics", "eigen_method")
    out = {"command": "eigen", **_threshold_summary(cfg), "dx": grid.dx}
    if args.curve:
        ls = [float(s) for s in args.curve.split(",")]
        vals = [eig.lambda0(p, l, grid, method=method).lambda0 for l in ls]
        out["curve"] = [{"l": l, "lambda0": v} for l, v in zip(ls, vals)]
        if args.out:
            _write_csv(_out_path(args.out + "_lambda0.csv"), ["l", "lambda0"], zip(ls, vals))
    elif args.alphas:
        alphas = [float(s) for s in args.alphas.split(",")]
        sc = eig.spectral_curve(p, args.l, alphas, grid)
        out.update({"l": args.l, "r_curve": [{"alpha": a, "r": r} for a, r in zip(sc.alphas, sc.r_values)],
                    "decreasing": sc.is_decreasing()})
        if args.out:
            _write_csv(_out_path(args.out + "_r_alpha.csv"), ["alpha", "r"], zip(sc.alphas, sc.r_values))
    else:
        res = eig.lambda0(p, args.l, grid, method=method)
        out.update({"l": args.l, **res.to_dict()})
    print(_dump(out))
    return 0


def cmd_lstar(cfg, args):
    grid = _grid(cfg, args)
    res = eig.bracket_lstar(cfg.params, grid, l_max=cfg.get("numerics", "l_max"),
                            tol=cfg.get("numerics", "lstar_tol"), method=cfg.get("numerics", "eigen_method"))
    print(_dump({"command": "lstar", **_threshold_summary(cfg), "dx": grid.dx, **res.to_dict()}))
    return 0


def cmd_steady(cfg, args):
    grid = _grid(cfg, args)
    st = steady_state(cfg.params, args.l, grid, tol=cfg.get("numerics", "tol"))
    if args.out:
        _write_csv(_out_path(args.out + "_steady.csv"), ["x", "u", "v"], zip(st.x, st.w, st.z))
    print(_dump({"command": "steady", **_threshold_summary(cfg), **st.to_dict(), "center": st.center()}))
    return 0


def cmd_fixed(cfg, args):
    p = cfg.params
    grid = _grid(cfg, args)
    dt = args.dt or cfg.get("numerics", "dt") or 0.9 / max(p.c1, p.c2) / 2
    T = args.T or cfg.get("numerics", "T")
    run = evolve_fixed(p, args.l, cfg.init, dt, T, grid, stride=max(1, int(round(1.0 / dt))))
    u, v = run.final()
    if args.out:
        rows = ([t, *map(float, uk), *map(float, vk)] for t, uk, vk in zip(run.t, run.u, run.v))
        _write_csv(_out_path(args.out + "_fixed_frames.csv"),
                   ["t"] + [f"u{j}" for j in range(run.x.size)] + [f"v{j}" for j in range(run.x.size)], rows)
        _write_csv(_out_path(args.out + "_fixed.csv"), ["x", "u", "v"], zip(run.x, u, v))
    i = int(np.argmin(np.abs(run.x)))
    print(_dump({"command": "fixed", "l": args.l, "T": float(run.t[-1]), "dt": dt,
                 "center": [u[i], v[i]], "sup": [u.max(), v.max()]}))
    return 0


def _run_settings(cfg, args, p=None):
    p = cfg.params if p is None else p
    grid = _grid(cfg, args)
    dt = getattr(args, "dt", None) or cfg.get("numerics", "dt") or suggest_dt(p, cfg.init, grid)
    T = getattr(args, "T", None) or cfg.get("numerics", "T")
    stride = getattr(args, "stride", None) or cfg.get("numerics", "stride")
    return grid, dt, T, stride


def _classify_kw(cfg):
    c = cfg.sections["classify"]
    return {"eps_mass": c["eps_mass"], "eps_front": c["eps_front"], "window": c["window"]}


def cmd_run(cfg, args):
    p = cfg.params
    grid, dt, T, stride = _run_settings(cfg, args)
    lstar = _lstar(cfg, grid)
    run = evolve(p, cfg.init, dt, T, stride=stride, grid=grid)
    c = classify(run, lstar, **_classify_kw(cfg))
    prefix = args.out or "run"
    rows = []
    for f in run.frames:
        rows.append([f.t, f.g, f.h, f.j_lo, f.u.size, *map(float, f.u), *map(float, f.v)])
    _write_csv(_out_path(prefix + "_frames.csv"), ["t", "g", "h", "j_lo", "n", "u...", "v..."], rows)
    _write_csv(_out_path(prefix + "_fronts.csv"), ["t", "g", "h", "g_rate", "h_rate"],
               (list(map(float, r)) for r in run.fronts))
    K1, K2 = run.K1, run.K2
    summary = {
        "command": "run", "config": cfg.echo(), "config_hash": cfg.content_hash(), **_threshold_summary(cfg),
        "lstar": lstar, "dx": grid.dx, "dt": dt, "T": float(run.t[-1]),
        "classification": c.to_dict(),
        "diagnostics": {"K1": K1, "K2": K2, "violations": [v.__dict__ for v in run.violations],
                        "mass": mass_diagnostic(run).to_dict(),
                        "final_width": float(run.h[-1] - run.g[-1]), "center": run.center()},
    }
    with open(_out_path(prefix + "_summary.json"), "w", encoding="utf-8") as fh:
        fh.write(_dump(summary) + "\n")
    print(_dump({"command": "run", "classification": c.to_dict(), "outputs": prefix}))
    return 0


def _append_results(path: Path, rows):
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(RESULTS_HEADER)
        for r in rows:
            w.writerow(r)


def cmd_mustar(cfg, args):
    grid = _grid(cfg, args)
    lstar = _lstar(cfg, grid)
    m = cfg.sections["mustar"]
    if lstar is None:
        from .errors import DegenerateRegime

        raise DegenerateRegime("R0 <= 1: vanishing for every mu")
    res = find_mustar(cfg.params, cfg.init, m["mu_lo"], m["mu_hi"], m["horizon"], m["tol"], lstar,
                      grid=grid, certify=m["certify"], **_classify_kw(cfg))
    h = cfg.content_hash()
    _append_results(_out_path(args.results or cfg.get("sweep", "results")),
                    [[h, _fmt(e.mu), e.tag, e.trigger, _fmt(e.t)] for e in res.ledger])
    print(_dump({"command": "mustar", "lstar": lstar, "config_hash": h, **res.to_dict()}))
    return 0


def cmd_sweep(cfg, args):
    grid = _grid(cfg, args)
    lstar = _lstar(cfg, grid)
    spec = args.mu or cfg.get("sweep", "mu")
    mus = [float(s) for s in spec.split(",") if s.strip()]
    if not mus:
        raise ConfigError("sweep needs a list of mu values (--mu or [sweep] mu)")
    horizon = args.T or cfg.get("numerics", "T")
    kw = _classify_kw(cfg)
    certify = cfg.get("classify", "certify")

    def one(mu):
        q = cfg.params.with_(mu=mu)
        dt = cfg.get("numerics", "dt") or suggest_dt(q, cfg.init, grid)
        _, c = classify_params(q, cfg.init, lstar, horizon, grid=grid, dt=dt, certify=certify, **kw)
        return mu, c

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(pool.map(one, mus))
    h = cfg.content_hash()
    _append_results(_out_path(args.results or cfg.get("sweep", "results")),
                    [[h, _fmt(mu), c.tag.value, c.trigger.value, _fmt(c.t)] for mu, c in results])
    print(_dump({"command": "sweep", "config_hash": h, "lstar": lstar,
                 "results": [{"mu": mu, **c.to_dict()} for mu, c in results]}))
    return 0


def cmd_compare(cfg, args):
    p = cfg.params
    upper_p = p.with_(mu=p.mu * args.mu_factor)
    upper_init = cfg.init.scaled(args.init_factor)
    grid = _grid(cfg, args)
    dt = args.dt or cfg.get("numerics", "dt") or min(suggest_dt(p, cfg.init, grid),
                                                      suggest_dt(upper_p, upper_init, grid))
    T = args.T or cfg.get("numerics", "T")
    lo = evolve(p, cfg.init, dt, T, grid=grid)
    up = evolve(upper_p, upper_init, dt, T, grid=grid)
    rep = comparison_check(lo, up)
    print(_dump({"command": "compare", "mu_factor": args.mu_factor, "init_factor": args.init_factor,
                 "dt": dt, "T": T, **rep.to_dict()}))
    return 0 if rep.passed else 1


def cmd_picard(cfg, args):
    p = cfg.params
    grid = _grid(cfg, args)
    res = picard_reference(p, cfg.init, T_short=args.T, grid=grid)
    Ts = float(res.t[-1])
    run = evolve(p, cfg.init, Ts / 128, Ts, grid=grid, stride=1)
    he = np.interp(res.t, run.t, run.h)
    ge = np.interp(res.t, run.t, run.g)
    gap = float(max(np.abs(he - res.h).max(), np.abs(ge - res.g).max()))
    db = delta_bounds(p, cfg.init, T0=Ts)
    slope = float(res.rates[:, 1].min())
    ok = res.strictly_decreasing() and gap < 5 * grid.dx and slope >= p.mu * db.delta1
    print(_dump({"command": "picard-check", "T_short": Ts, "changes": res.changes,
                 "strictly_decreasing": res.strictly_decreasing(), "front_gap": gap,
                 "min_h_rate": slope, "mu_delta1": p.mu * db.delta1, **db.to_dict(), "passed": ok}))
    return 0 if ok else 1


COMMANDS = {
    "validate": cmd_validate, "ode": cmd_ode, "eigen": cmd_eigen, "lstar": cmd_lstar,
    "steady": cmd_steady, "fixed": cmd_fixed, "run": cmd_run, "mustar": cmd_mustar,
    "sweep": cmd_sweep, "compare": cmd_compare, "picard-check": cmd_picard,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nonlocal-epidemic",
                                 description="Nonlocal epidemic model with free boundaries.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="configuration file")
        sp.add_argument("--dx", type=float, help="lattice spacing")
        return sp

    add("validate", "check kernels, reaction and initial data")
    sp = add("ode", "homogeneous ODE trajectory")
    sp.add_argument("--T", type=float)
    sp.add_argument("--out", help="output prefix")
    sp = add("eigen", "principal eigenvalue on [-l, l]")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--l", type=float)
    g.add_argument("--curve", help="comma-separated half-widths")
    sp.add_argument("--alphas", help="with --l: comma-separated alpha values for the r(alpha) curve")
    sp.add_argument("--out", help="output prefix for the curve CSV")
    add("lstar", "critical half-width l*")
    sp = add("steady", "positive steady state on [-l, l]")
    sp.add_argument("--l", type=float, required=True)
    sp.add_argument("--out")
    sp = add("fixed", "time evolution on the fixed interval [-l, l]")
    sp.add_argument("--l", type=float, required=True)
    sp.add_argument("--T", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--out")
    sp = add("run", "free-boundary run with classification")
    sp.add_argument("--T", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--stride", type=int)
    sp.add_argument("--out", help="output prefix (default: run)")
    sp = add("mustar", "critical expansion coefficient by bisection")
    sp.add_argument("--results", help="results CSV to append to")
    sp = add("sweep", "classify a list of mu values")
    sp.add_argument("--mu", help="comma-separated mu values")
    sp.add_argument("--T", type=float, help="horizon")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--results", help="results CSV to append to")
    sp = add("compare", "comparison-principle check between two runs")
    sp.add_argument("--mu-factor", type=float, default=2.0)
    sp.add_argument("--init-factor", type=float, default=1.0)
    sp.add_argument("--T", type=float)
    sp.add_argument("--dt", type=float)
    sp = add("picard-check", "fixed-point reference against the integrator")
    sp.add_argument("--T", type=float, help="short horizon (default: contraction horizon)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = _load(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(_dump({"command": args.command, "error": type(e).__name__, "message": str(e),
                     "errors": e.errors}))
        return 2
    except NonlocalEpidemicError as e:
        print(_dump({"command": args.command, "error": type(e).__name__, "message": str(e)}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
