"""Command line front end: config parsing, pipeline dispatch and file output.

Usage::

    fictitious-monopoly derive --config game.json --out out/

A run writes ``report.json`` (``monopoly.json`` for ``derive``), plot-ready
CSV curves, and a sidecar ``run.log``.  Data files contain no timestamps so
identical configs give byte-identical outputs.  Exit status is 0 on
success, 2 when the verdict is ``NotRationalizable`` and 1 on errors (an
``error.json`` is written).
"""

import argparse
import copy
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import additive_duopoly as ad
from . import asym_duopoly as asym
from .curves import Curve
from .errors import EquivalenceError, SchemaError
from .game_model import (
    AdditiveSeparable, CobbDouglas, Finite, GameSpec, Infinite, IsoelasticPricing, ScalarFn,
    symmetric_reduce,
)
from .mpne_solver import characteristics_mpne, game_pde_residual, stationary_mpne
from .symmetric_equiv import competition_index, derive_monopoly, terminal_strategy
from .verifier import THRESHOLDS, cobb_douglas_oracle, verify_equivalence

log = logging.getLogger("fictitious_monopoly")

COMMANDS = ("derive", "mpne", "verify", "ci", "rationalize", "asym", "sweep")
SYMMETRIC_FAMILIES = ("cobb_douglas", "isoelastic_pricing", "additive")

# --------------------------------------------------------------------------
# schema

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_RANGE = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

_SCALAR_FN = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["neg_exp", "linear", "zero", "power", "crra", "log", "quadratic"]},
        "alpha": _NUM, "slope": _NUM, "coef": _NUM, "exponent": _NUM,
    },
    "additionalProperties": False,
}

_HORIZON = {
    "type": "object",
    "required": ["type"],
    "properties": {"type": {"enum": ["infinite", "finite"]}, "T": _POS, "bequest": _SCALAR_FN},
    "additionalProperties": False,
    "if": {"properties": {"type": {"const": "finite"}}},
    "then": {"required": ["type", "T", "bequest"]},
}

_SYM_COMMON = {
    "N": {"type": "integer", "minimum": 1},
    "r": {"type": "number", "minimum": 0},
    "horizon": _HORIZON,
    "rate_domain": _RANGE,
    "stock_domain": _RANGE,
}


def _family(name, required, props):
    return {
        "type": "object",
        "required": ["family", *required],
        "properties": {"family": {"const": name}, **props},
        "additionalProperties": False,
    }


_FAMILIES = [
    _family("cobb_douglas", ["alpha", "beta", "N"], {"alpha": _NUM, "beta": _NUM, **_SYM_COMMON}),
    _family("isoelastic_pricing", ["q", "N"],
            {"q": _NUM, "A": _NUM, "cost": _SCALAR_FN, **_SYM_COMMON}),
    _family("additive", ["own", "cross", "N"],
            {"own": _SCALAR_FN, "cross": _SCALAR_FN, **_SYM_COMMON}),
    _family("additive_duopoly", ["own1", "own2", "cross1", "cross2"],
            {"own1": _SCALAR_FN, "own2": _SCALAR_FN, "cross1": _SCALAR_FN,
             "cross2": _SCALAR_FN, "T": _POS, "B1": _SCALAR_FN, "B2": _SCALAR_FN,
             "rate_domain": _RANGE, "stock_domain": _RANGE}),
    _family("asym_cobb_douglas", ["alpha1", "alpha2", "beta"],
            {"alpha1": _NUM, "alpha2": _NUM, "beta": _NUM,
             "r1": {"type": "number", "minimum": 0}, "r2": {"type": "number", "minimum": 0}}),
]

# dispatch on ``family`` so errors point at the offending key
_GAME = {
    "type": "object",
    "required": ["family"],
    "properties": {"family": {"enum": [f["properties"]["family"]["const"] for f in _FAMILIES]}},
    "allOf": [{"if": {"properties": {"family": {"const": f["properties"]["family"]["const"]}}},
               "then": f} for f in _FAMILIES],
}

_NUMERICS = {
    "type": "object",
    "properties": {
        "tol": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "grid": {"type": "integer", "minimum": 5},
        "rho": {"type": ["number", "null"], "minimum": 0},
        "C": {"type": ["number", "null"]},
        "u_ref": _POS,
        "method": {"enum": ["auto", "closed_form", "quadrature"]},
        "u_range": {"type": ["array", "null"], "items": _NUM, "minItems": 2, "maxItems": 2},
        "x_range": _RANGE,
        "t_steps": {"type": "integer", "minimum": 5},
        "branch": {"enum": ["plus", "minus"]},
        "region": {"type": ["array", "null"], "items": _RANGE, "minItems": 2, "maxItems": 2},
        "workers": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

_OUTPUT = {
    "type": "object",
    "properties": {"dir": {"type": "string"}, "curves": {"type": "boolean"}},
    "additionalProperties": False,
}

_SWEEP = {
    "type": "object",
    "required": ["parameter", "values"],
    "properties": {
        "parameter": {"type": "string"},
        "values": {"type": "array", "items": _NUM, "minItems": 1},
        "command": {"enum": [c for c in COMMANDS if c != "sweep"]},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "game"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "game": _GAME,
        "numerics": _NUMERICS,
        "output": _OUTPUT,
        "sweep": _SWEEP,
    },
    "additionalProperties": False,
    "if": {"properties": {"command": {"const": "sweep"}}},
    "then": {"required": ["command", "game", "sweep"]},
}

NUMERIC_DEFAULTS = {
    "tol": None, "grid": 200, "rho": None, "C": None, "u_ref": 1.0, "method": "auto",
    "u_range": None, "x_range": [0.1, 10.0], "t_steps": 41, "branch": "plus", "region": None,
    "workers": 4,
}
OUTPUT_DEFAULTS = {"dir": "out", "curves": True}
GAME_DEFAULTS = {
    "cobb_douglas": {"r": 0.05, "horizon": {"type": "infinite"}},
    "isoelastic_pricing": {"A": 1.0, "r": 0.05, "horizon": {"type": "infinite"}},
    "additive": {"r": 0.05, "horizon": {"type": "infinite"}, "rate_domain": [1e-3, 50.0]},
    "additive_duopoly": {"T": 1.0, "rate_domain": list(ad.DEFAULT_ADDITIVE_DOMAIN)},
    "asym_cobb_douglas": {"r1": 0.05, "r2": 0.05},
}


@dataclass
class RunConfig:
    command: str
    game: dict
    numerics: dict = field(default_factory=lambda: dict(NUMERIC_DEFAULTS))
    output: dict = field(default_factory=lambda: dict(OUTPUT_DEFAULTS))
    sweep: Optional[dict] = None

    def to_dict(self):
        out = {"command": self.command, "game": self.game, "numerics": self.numerics,
               "output": self.output}
        if self.sweep is not None:
            out["sweep"] = self.sweep
        return copy.deepcopy(out)

    def build(self):
        return build_game(self.game)

    def thresholds(self, kind="closed_form"):
        tol = self.numerics["tol"]
        return THRESHOLDS[kind] if tol is None else (tol, 100.0 * tol)


def serialize(config):
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


def _schema_errors(doc):
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errs = []
    for e in sorted(validator.iter_errors(doc), key=lambda e: [str(p) for p in e.absolute_path]):
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        errs.append(f"{path}: {e.message}")
    return errs


def parse_config(text):
    """Parse and validate a JSON config into a :class:`RunConfig`.

    Unknown or missing keys raise :class:`SchemaError` (with per-path
    messages); values rejected by the model constructors raise
    ``ValueError``.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}", [str(exc)]) from None
    errs = _schema_errors(doc)
    if errs:
        raise SchemaError("config does not match the schema", errs)
    game = dict(GAME_DEFAULTS[doc["game"]["family"]])
    game.update(doc["game"])
    numerics = dict(NUMERIC_DEFAULTS)
    numerics.update(doc.get("numerics", {}))
    output = dict(OUTPUT_DEFAULTS)
    output.update(doc.get("output", {}))
    cfg = RunConfig(doc["command"], game, numerics, output, doc.get("sweep"))
    # constructing the model runs every range check
    obj = cfg.build()
    _check_command(cfg, obj)
    return cfg


def _check_command(cfg, obj):
    fam = cfg.game["family"]
    cmd = cfg.sweep.get("command", "ci") if cfg.command == "sweep" else cfg.command
    if cmd == "rationalize" and fam != "additive_duopoly":
        raise ValueError("rationalize needs the additive_duopoly family")
    if cmd == "asym" and fam != "asym_cobb_douglas":
        raise ValueError("asym needs the asym_cobb_douglas family")
    if cmd in ("mpne", "verify", "ci") and fam not in SYMMETRIC_FAMILIES:
        raise ValueError(f"{cmd} needs a symmetric game family")
    if cmd == "derive" and fam == "additive_duopoly":
        raise ValueError("derive is not defined for additive_duopoly; use rationalize")
    if cfg.command == "sweep":
        if cfg.sweep["parameter"] not in cfg.game or cfg.sweep["parameter"] == "family":
            raise ValueError(f"sweep parameter {cfg.sweep['parameter']!r} is not a game field")
        for v in cfg.sweep["values"]:
            build_game({**cfg.game, cfg.sweep["parameter"]: v})


def _scalar(d):
    return None if d is None else ScalarFn.from_dict(d)


def build_game(game):
    """Model object (GameSpec, AdditiveSpec or AsymParams) from a game dict."""
    fam = game["family"]
    if fam == "asym_cobb_douglas":
        return asym.AsymParams(game["alpha1"], game["alpha2"], game["beta"], game["r1"], game["r2"])
    if fam == "additive_duopoly":
        return ad.AdditiveSpec(
            _scalar(game["own1"]), _scalar(game["own2"]), _scalar(game["cross1"]),
            _scalar(game["cross2"]), T=game["T"], B1=_scalar(game.get("B1")),
            B2=_scalar(game.get("B2")), rate_domain=tuple(game["rate_domain"]),
            **({"stock_domain": tuple(game["stock_domain"])} if "stock_domain" in game else {}))
    if fam == "cobb_douglas":
        if game["alpha"] == 1:
            raise ValueError("alpha = 1 is excluded (closed forms divide by 1 - alpha)")
        utility = CobbDouglas(game["alpha"], game["beta"])
    elif fam == "isoelastic_pricing":
        utility = IsoelasticPricing(game["q"], game["A"], _scalar(game.get("cost")))
    else:
        utility = AdditiveSeparable(_scalar(game["own"]), _scalar(game["cross"]))
    h = game["horizon"]
    horizon = Infinite() if h["type"] == "infinite" else Finite(h["T"], _scalar(h["bequest"]))
    kw = {k: tuple(game[k]) for k in ("rate_domain", "stock_domain") if k in game}
    return GameSpec(game["N"], utility, game["r"], horizon, **kw)


# --------------------------------------------------------------------------
# output helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if obj is None or isinstance(obj, (int, str)):
        return obj
    return repr(obj)


def write_json(path, data):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def write_csv(path, columns):
    """Columns dict (ordered) of equal-length arrays; values as ``%.17g``."""
    names = list(columns)
    data = [np.asarray(columns[n], float).ravel() for n in names]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([format(v, ".17g") for v in row])


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0]
    arr = np.array([[float(v) for v in r] for r in rows[1:]])
    return {n: arr[:, i] for i, n in enumerate(names)}


def read_curves_csv(path):
    """Tabulated curves (keyed by column) against the first column."""
    cols = read_csv(path)
    names = list(cols)
    x = cols[names[0]]
    return {n: Curve.tabulated(x, cols[n], label=n) for n in names[1:]}


def report(command, verdict, constants=None, residuals=None, witnesses=None, provenance=None,
           extra=None):
    out = {"command": command, "verdict": verdict, "constants": constants or {},
           "residuals": residuals or {}, "witnesses": witnesses or [],
           "provenance": provenance or {}}
    if extra:
        out.update(extra)
    return out


# --------------------------------------------------------------------------
# commands


def _x_grid(cfg):
    lo, hi = cfg.numerics["x_range"]
    n = cfg.numerics["grid"]
    return np.geomspace(lo, hi, n) if lo > 0 else np.linspace(lo, hi, n)


def _derive(cfg, spec):
    num = cfg.numerics
    u_range = None if num["u_range"] is None else tuple(num["u_range"])
    return derive_monopoly(spec, rho=num["rho"], C=num["C"], u_ref=num["u_ref"],
                           method="quadrature" if num["method"] == "quadrature" else "auto",
                           u_range=u_range)


def _cd_constants(game, r=None):
    if game["family"] != "cobb_douglas":
        return {}
    o = cobb_douglas_oracle(game["alpha"], game["beta"], game["N"], game["r"] if r is None else r)
    return {"eta1": o.eta1, "eta2": o.eta2, "k_f": o.k_f, "c": o.c, "m": o.m,
            "CI_oracle": o.CI, "CI_duopoly_shortcut": o.ci_duopoly_shortcut}


def _curve_grid(oc, n):
    lo, hi = oc.domain
    return np.geomspace(lo, hi, n) if lo > 0 else np.linspace(lo, hi, n)


def cmd_derive(cfg, out):
    obj = cfg.build()
    if isinstance(obj, asym.AsymParams):
        delta = asym.solve_delta(obj)
        oc = asym.asym_fictitious(obj, delta, rho=cfg.numerics["rho"],
                                  C=1.0 if cfg.numerics["C"] is None else cfg.numerics["C"],
                                  u_ref=cfg.numerics["u_ref"],
                                  domain=tuple(cfg.numerics["u_range"] or (1e-2, 1e2)))
        constants = {"rho": oc.rho, "C": oc.C, "u_ref": oc.u_ref, **oc.meta}
        residuals = {}
    else:
        oc = _derive(cfg, obj)
        profile = symmetric_reduce(obj)
        constants = {"rho": oc.rho, "C": oc.C, "u_ref": oc.u_ref, "r": oc.r, "N": oc.N,
                     "CI": competition_index(profile, obj.N, oc.u_ref),
                     **_cd_constants(cfg.game, oc.r)}
        residuals = {"identification": oc.meta.get("identification"),
                     "foc": oc.meta.get("foc")}
    u = _curve_grid(oc, cfg.numerics["grid"])
    doc = report("derive", "Derived", constants, residuals, [],
                 {"f": oc.f.kind, "gamma": oc.gamma.kind, "ell": oc.ell.kind,
                  "monopoly": oc.provenance},
                 {"domain": list(oc.domain),
                  "curves": {"f": oc.f.params, "gamma": oc.gamma.params, "ell": oc.ell.params}})
    write_json(out / "monopoly.json", doc)
    if cfg.output["curves"]:
        write_csv(out / "curves.csv", {"u": u, "f": oc.f(u), "gamma": oc.gamma(u), "ell": oc.ell(u)})
    return doc


def _strategy(cfg, spec, profile, oc=None):
    x = _x_grid(cfg)
    if spec.finite:
        phi = oc.terminal if oc is not None and oc.terminal is not None else terminal_strategy(spec)
        t = np.linspace(0.0, spec.horizon.T, cfg.numerics["t_steps"])
        return characteristics_mpne(spec, profile, phi, t, x)
    return stationary_mpne(spec, profile, x)


def cmd_mpne(cfg, out):
    spec = cfg.build()
    profile = symmetric_reduce(spec)
    s = _strategy(cfg, spec, profile)
    res = game_pde_residual(s, spec, profile)
    constants = _cd_constants(cfg.game)
    if s.stationary and "c" in constants:
        constants["max_rel_error_vs_cx"] = float(np.max(np.abs(s.values / (constants["c"] * s.x) - 1)))
    doc = report("mpne", "Solved", constants, {"game_pde": res.to_dict()}, [],
                 {"strategy": s.provenance}, {"meta": s.meta})
    write_json(out / "report.json", doc)
    if cfg.output["curves"]:
        if s.stationary:
            write_csv(out / "strategy.csv", {"x": s.x, "u": s.values})
        else:
            T, X = np.meshgrid(s.t, s.x, indexing="ij")
            write_csv(out / "strategy.csv", {"t": T, "x": X, "u": s.values})
    return doc


def cmd_verify(cfg, out):
    spec = cfg.build()
    profile = symmetric_reduce(spec)
    oc = _derive(cfg, spec)
    s = _strategy(cfg, spec, profile, oc)
    kind = "closed_form" if oc.provenance == "closed_form" else "numeric"
    rep = verify_equivalence(spec, oc, s, thresholds=cfg.thresholds(kind))
    d = rep.to_dict()
    doc = report("verify", rep.verdict,
                 {"CI": rep.competition_index, "rho": oc.rho, **_cd_constants(cfg.game, oc.r)},
                 {"control_pde": d["residual_control_pde"], "game_pde": d["residual_game_pde"],
                  "identification": d["residual_identification"], "foc": d["foc_residual"]},
                 d["concavity"]["violations"],
                 {"monopoly": oc.provenance, "strategy": s.provenance},
                 {"notes": d["notes"]})
    write_json(out / "report.json", doc)
    return doc


def cmd_ci(cfg, out):
    spec = cfg.build()
    profile = symmetric_reduce(spec)
    u = cfg.numerics["u_ref"]
    ci = competition_index(profile, spec.N, u)
    prov = "closed_form" if profile.linear is not None else "numeric"
    doc = report("ci", "Computed", {"CI": ci, "u": u, **_cd_constants(cfg.game)}, {}, [],
                 {"CI": prov})
    write_json(out / "report.json", doc)
    return doc


def cmd_rationalize(cfg, out):
    spec = cfg.build()
    region = cfg.numerics["region"]
    region = None if region is None else tuple(tuple(r) for r in region)
    n = min(cfg.numerics["grid"], 400)
    v = ad.rationalizability_test(spec, region, n=n)
    constants = {"counts": v.counts, "degenerate": v.degenerate}
    residuals = {}
    extra = {"region": [list(r) for r in v.region]}
    if v.verdict != "NotRationalizable":
        (a1, b1), (a2, b2) = v.region
        mid = (0.5 * (a1 + b1), 0.5 * (a2 + b2))
        try:
            es = ad.eigen_pair(spec, *mid)
            constants["eigenvalues_at_center"] = {"u": list(mid), "lambda": es.lam, "mu": es.mu}
        except EquivalenceError as exc:
            extra["eigen_note"] = exc.to_dict()
    if v.verdict == "Rationalizable-candidate" and spec.B1 is not None:
        branch = cfg.numerics["branch"]
        try:
            theta = ad.theta_ode(spec, branch=branch)
            oc = ad.construct_additive_oc(spec, theta, branch)
            extra["construction"] = {"branch": branch, "case": oc.meta.get("case"),
                                     "printed_case": oc.meta.get("printed_case")}
            residuals["ell_second_max"] = oc.meta.get("ell_second_max")
            if spec.B2 is not None:
                lo, hi = cfg.numerics["x_range"]
                link = ad.bequest_link_check(spec, theta, np.linspace(lo, hi, 50))
                residuals["bequest_link"] = {"passed": link.passed, "defect": link.defect}
        except EquivalenceError as exc:
            extra["construction"] = {"branch": branch, "error": exc.to_dict()}
    doc = report("rationalize", v.verdict, constants, residuals, v.witnesses,
                 {"discriminant": "grid_sign_test"}, extra)
    write_json(out / "report.json", doc)
    return doc


def cmd_asym(cfg, out):
    p = cfg.build()
    delta = asym.solve_delta(p)
    xi = asym.fictitious_slope(p, delta)
    u = np.geomspace(0.1, 10.0, 50)
    doc = report("asym", "Solved",
                 {"delta": delta, "xi": xi, "c": asym.mpne_slope(p, delta), "kappa": p.kappa,
                  "epsilon": p.epsilon, "source_ratio": asym.source_ratio(p)},
                 {"ratio": abs(float(asym.ratio_residual(p, delta))),
                  "theta": float(np.max(asym.theta_residual(p, delta, u))),
                  "row_proportionality": float(np.max(asym.row_proportionality(p, delta, u)))},
                 [], {"delta": "closed_form"})
    write_json(out / "report.json", doc)
    return doc


def _sweep_item(cfg, value, out):
    param = cfg.sweep["parameter"]
    sub = RunConfig(cfg.sweep.get("command", "ci"), {**cfg.game, param: value},
                    dict(cfg.numerics), dict(cfg.output))
    out.mkdir(parents=True, exist_ok=True)
    try:
        doc = COMMAND_TABLE[sub.command](sub, out)
        return {"value": value, "ok": True, "doc": doc}
    except EquivalenceError as exc:
        write_json(out / "error.json", exc.to_dict())
        return {"value": value, "ok": False, "doc": {"verdict": "Error", "error": exc.to_dict()}}


def cmd_sweep(cfg, out):
    param = cfg.sweep["parameter"]
    values = cfg.sweep["values"]
    dirs = [out / "items" / f"{k:03d}_{param}" for k in range(len(values))]
    with ThreadPoolExecutor(max_workers=cfg.numerics["workers"]) as pool:
        results = list(pool.map(lambda a: _sweep_item(cfg, *a), zip(values, dirs)))
    cols = {param: [], "CI": [], "CI_oracle": [], "ok": []}
    for res in results:
        c = res["doc"].get("constants", {})
        cols[param].append(res["value"])
        cols["CI"].append(c.get("CI", float("nan")))
        cols["CI_oracle"].append(c.get("CI_oracle", float("nan")) if c.get("CI_oracle") is not None
                                 else float("nan"))
        cols["ok"].append(1.0 if res["ok"] else 0.0)
    write_csv(out / "sweep.csv", cols)
    n_bad = sum(not r["ok"] for r in results)
    doc = report("sweep", "Completed" if n_bad == 0 else "Partial",
                 {"parameter": param, "n": len(values), "failed": n_bad}, {},
                 [], {"items": "per-item reports under items/"},
                 {"items": [{"value": r["value"], "verdict": r["doc"].get("verdict")} for r in results]})
    write_json(out / "report.json", doc)
    return doc


COMMAND_TABLE = {
    "derive": cmd_derive, "mpne": cmd_mpne, "verify": cmd_verify, "ci": cmd_ci,
    "rationalize": cmd_rationalize, "asym": cmd_asym, "sweep": cmd_sweep,
}


def exit_code(doc):
    return 2 if doc.get("verdict") == "NotRationalizable" else 0


def run(config, out=None):
    """Execute ``config``; returns ``(exit_code, report_dict)``."""
    out = Path(config.output["dir"] if out is None else out)
    out.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(out / "run.log", mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    try:
        log.info("command=%s family=%s", config.command, config.game["family"])
        err = out / "error.json"
        if err.exists():
            err.unlink()
        try:
            doc = COMMAND_TABLE[config.command](config, out)
        except EquivalenceError as exc:
            log.error("failed: %s", exc)
            write_json(err, {"error": exc.to_dict()})
            return 1, {"verdict": "Error", "error": exc.to_dict()}
        code = exit_code(doc)
        log.info("verdict=%s exit=%d", doc.get("verdict"), code)
        return code, doc
    finally:
        log.removeHandler(handler)
        handler.close()


def build_parser():
    p = argparse.ArgumentParser(prog="fictitious-monopoly",
                                description="Fictitious monopoly constructions for resource oligopolies.")
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="overrides the command in the config")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", default=None, help="output directory (default ./out)")
    p.add_argument("--tol", type=float, help="acceptance tolerance override")
    p.add_argument("--grid", type=int, help="grid size override")
    p.add_argument("--branch", choices=("plus", "minus"))
    p.add_argument("--rho", type=float)
    return p


def _apply_overrides(doc, args):
    num = doc.setdefault("numerics", {})
    for key in ("tol", "grid", "branch", "rho"):
        v = getattr(args, key)
        if v is not None:
            num[key] = v
    if args.command:
        doc["command"] = args.command
    if args.out is not None:
        doc.setdefault("output", {})["dir"] = args.out
    return doc


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = Path(args.out or "out")
    try:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise SchemaError("config root must be an object", ["<root>: not an object"])
        cfg = parse_config(json.dumps(_apply_overrides(doc, args)))
        out = Path(cfg.output["dir"])
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        out.mkdir(parents=True, exist_ok=True)
        err = exc.to_dict() if isinstance(exc, EquivalenceError) else {
            "type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, SchemaError):
            err["errors"] = exc.errors
        write_json(out / "error.json", {"error": err})
        print(f"error: {err['message']}", file=sys.stderr)
        for e in err.get("errors", []):
            print(f"  {e}", file=sys.stderr)
        return 1
    code, doc = run(cfg)
    print(f"{cfg.command}: {doc.get('verdict')} -> {os.fspath(out)}")
    return code


if __name__ == "__main__":
    sys.exit(main())
