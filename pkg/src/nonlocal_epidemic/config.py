"""Run configuration files.

The format is sectioned ``key = value`` text read with :mod:`configparser`::

    [model]
    preset = P1          ; optional, P1 or P2, other keys override it
    d1 = 1.0
    mu = 1.0

    [reaction]
    family = monod
    beta = 1.0
    kappa = 1.0

    [kernel.J1]          ; likewise kernel.J2 and kernel.K
    family = tent
    width = 1.0

    [initial]
    shape = tent         ; tent, cosine or plateau
    h0 = 1.0

    [numerics]
    dx = 0.02
    T = 200

Every key is optional.  Unknown sections or keys and invalid values are
collected and reported together.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass, field

from .errors import NonlocalEpidemicError, ParseError, ValidationError
from .kernels import KernelFamily, make_kernel
from .model import InitialData, ModelParams, Monod, canonical_params

__all__ = ["RunConfig", "parse_config", "parse_config_string", "DEFAULTS", "SCHEMA"]


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _any(v):
    return True


# section -> key -> (type, default, check)
SCHEMA = {
    "model": {
        "preset": (str, "P1", None),
        "d1": (float, None, _pos), "d2": (float, None, _pos),
        "a11": (float, None, _pos), "a12": (float, None, _pos), "a22": (float, None, _pos),
        "mu": (float, 1.0, _pos), "rho": (float, 1.0, _nonneg),
    },
    "reaction": {
        "family": (str, "monod", None),
        "beta": (float, 1.0, _pos), "kappa": (float, 1.0, _pos),
    },
    "kernel": {
        "family": (str, "tent", None),
        "width": (float, 1.0, _pos), "sigma": (float, None, _pos),
        "gamma": (float, None, _pos), "truncation": (float, None, _pos),
    },
    "initial": {
        "shape": (str, "tent", None), "h0": (float, 1.0, _pos),
        "amplitude_u": (float, 1.0, _pos), "amplitude_v": (float, 1.0, _pos),
    },
    "numerics": {
        "dx": (float, 0.02, _pos), "dt": (float, None, _pos), "T": (float, 200.0, _pos),
        "stride": (int, None, _pos), "tol": (float, 1e-8, _pos),
        "eigen_method": (str, "noda", None), "l_max": (float, 10.0, _pos),
        "lstar_tol": (float, 1e-4, _pos),
    },
    "classify": {
        "eps_mass": (float, None, _pos), "eps_front": (float, 1e-6, _pos),
        "window": (float, 10.0, _pos), "certify": (bool, False, None),
    },
    "ode": {
        "u0": (float, 1.0, _nonneg), "v0": (float, 1.0, _nonneg),
        "T": (float, 200.0, _pos), "dt": (float, 0.01, _pos),
    },
    "mustar": {
        "mu_lo": (float, 1e-3, _pos), "mu_hi": (float, 50.0, _pos),
        "horizon": (float, 500.0, _pos), "tol": (float, 0.05, _pos), "certify": (bool, True, None),
    },
    "sweep": {
        "mu": (str, "", None), "results": (str, "results.csv", None),
    },
}
KERNEL_SECTIONS = ("kernel.J1", "kernel.J2", "kernel.K")

DEFAULTS = {
    sec: {k: spec[1] for k, spec in keys.items()} for sec, keys in SCHEMA.items()
}


def _convert(typ, raw):
    if typ is bool:
        s = raw.strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if typ is int:
        f = float(raw)
        if f != int(f):
            raise ValueError(f"not an integer: {raw!r}")
        return int(f)
    if typ is float:
        f = float(raw)
        if not math.isfinite(f):
            raise ValueError(f"not finite: {raw!r}")
        return f
    return raw.strip()


@dataclass
class RunConfig:
    """Validated configuration: model, initial data and per-section options."""

    params: ModelParams
    init: InitialData
    sections: dict
    source: str = "<defaults>"
    raw: dict = field(default_factory=dict, repr=False)

    def get(self, section: str, key: str):
        return self.sections[section][key]

    def echo(self) -> dict:
        return {"model": self.params.describe(), "initial": self.init.describe(),
                **{s: dict(v) for s, v in self.sections.items() if s not in ("model", "initial")}}

    def content_hash(self) -> str:
        blob = json.dumps(self.echo(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _build(cp: configparser.ConfigParser, source: str) -> RunConfig:
    errors = []
    values = {}
    for sec in cp.sections():
        base = "kernel" if sec in KERNEL_SECTIONS else sec
        if base not in SCHEMA or sec == "kernel":
            errors.append(f"[{sec}]: unknown section")
            continue
        for key, raw in cp.items(sec):
            if key not in SCHEMA[base] and key.lower() not in {k.lower() for k in SCHEMA[base]}:
                errors.append(f"[{sec}] {key}: unknown key")

    def read(sec, base):
        out = {}
        have = {k.lower(): (k, v) for k, v in cp.items(sec)} if cp.has_section(sec) else {}
        for key, (typ, default, check) in SCHEMA[base].items():
            if key.lower() in have:
                raw = have[key.lower()][1]
                try:
                    val = _convert(typ, raw)
                except ValueError as e:
                    errors.append(f"[{sec}] {key}: {e}")
                    continue
                if check is not None and not check(val):
                    errors.append(f"[{sec}] {key}: invalid value {val!r}")
                    continue
                out[key] = val
            else:
                out[key] = default
        return out

    for sec in SCHEMA:
        if sec != "kernel":
            values[sec] = read(sec, sec)
    for sec in KERNEL_SECTIONS:
        values[sec] = read(sec, "kernel")

    preset = str(values["model"]["preset"]).upper()
    if preset not in ("P1", "P2"):
        errors.append(f"[model] preset: unknown preset {preset!r}")
        preset = "P1"
    if values["reaction"]["family"].lower() != "monod":
        errors.append(f"[reaction] family: unsupported reaction {values['reaction']['family']!r}")
    if values["initial"]["shape"] not in ("tent", "cosine", "plateau"):
        errors.append(f"[initial] shape: unknown shape {values['initial']['shape']!r}")
    if values["numerics"]["eigen_method"] not in ("noda", "power"):
        errors.append(f"[numerics] eigen_method: unknown method {values['numerics']['eigen_method']!r}")

    kernels = {}
    for sec in KERNEL_SECTIONS:
        kv = values[sec]
        try:
            fam = KernelFamily.parse(kv["family"])
            kernels[sec.split(".")[1]] = make_kernel(fam, width=kv["width"], sigma=kv["sigma"],
                                                     gamma=kv["gamma"], truncation=kv["truncation"])
        except NonlocalEpidemicError as e:
            errors.append(f"[{sec}] {e}")

    params = init = None
    if not errors:
        m = values["model"]
        over = {k: m[k] for k in ("d1", "d2", "a11", "a12", "a22") if m[k] is not None}
        try:
            params = canonical_params(preset, mu=m["mu"], rho=m["rho"],
                                      reaction=Monod(values["reaction"]["beta"], values["reaction"]["kappa"]),
                                      **kernels, **over)
            iv = values["initial"]
            init = InitialData.from_spec(iv["shape"], iv["h0"], iv["amplitude_u"], iv["amplitude_v"])
        except NonlocalEpidemicError as e:
            errors.append(str(e))
    if errors:
        raise ValidationError(f"{source}: {len(errors)} configuration error(s)", errors)
    sections = {k: v for k, v in values.items() if not k.startswith("kernel.")}
    return RunConfig(params, init, sections, source, {s: dict(cp.items(s)) for s in cp.sections()})


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    return cp


def parse_config_string(text: str, source: str = "<string>") -> RunConfig:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        raise ParseError(f"{source}: {e}", [str(e)]) from None
    return _build(cp, source)


def parse_config(path) -> RunConfig:
    """Read and validate a configuration file.

    Raises
    ------
    ParseError
        If the file is missing or not valid sectioned text.
    ValidationError
        Listing every invalid or unknown key.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ParseError(f"{path}: {e.strerror}", [str(e)]) from None
    return parse_config_string(text, str(path))
