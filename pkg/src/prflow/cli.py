"""Command-line interface: ``prflow <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
Floats are written with 17 significant digits, so identical inputs give
byte-identical outputs.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import orbits as _orbits
from .core import check_orientability, expand_repetitions
from .models import load_model, normalize_region
from .resonances import locate_resonances, verify_against_oracle, _report_dict
from .traces import continuation, trace_sum, zeta_product
from .transport import (
    builtin_bump,
    certify_cones,
    check_convexity,
    mask_distances,
    resolvent_apply,
    trapped_set_approx,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
COMMANDS = ("orbits", "trace", "zeta", "resonances", "resolvent", "verify")

# per-model settings for ``verify``: (cone aperture in degrees, t0, required factor)
CONE_SETTINGS = {"basic": (20.0, 1.0, 2.0), "cat": (20.0, 1.0, 2.0), "horseshoe": (20.0, 1.0, 2.5)}
TRAPPED_TOL = 1e-3


class ConfigError(ValueError):
    pass


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _json_encode(obj: Any) -> str:
    """JSON with floats as %.17g; non-finite floats become null."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


@dataclass
class RunConfig:
    command: str
    model: dict
    params: dict = field(default_factory=dict)
    out: Optional[str] = None
    format: str = "csv"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        p = self.params
        for key in ("tmax", "T"):
            if key in p and p[key] is not None and not p[key] > 0:
                raise ConfigError(f"{key} must be positive")
        if p.get("tmax") is not None and p["tmax"] > _orbits.N_MAX * 2 * math.pi:
            raise ConfigError("tmax exceeds the enumeration limit")
        grid = p.get("grid")
        if grid is not None and any(g < 2 for g in np.atleast_1d(grid)):
            raise ConfigError("grids need at least 2 points per axis")
        for key in ("tol", "h"):
            if key in p and p[key] is not None and not p[key] > 0:
                raise ConfigError(f"{key} must be positive")


def _parse_grid(text: str):
    parts = str(text).lower().split("x")
    try:
        vals = [int(v) for v in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use N or NxM") from None
    return tuple(vals) if len(vals) == 2 else vals[0]


def _parse_region(text: str):
    try:
        vals = [float(v) for v in str(text).split(",")]
        return normalize_region(vals)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad region {text!r}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prflow", description="Dynamical traces and resonances of open hyperbolic flows.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--model", choices=("basic", "cat", "horseshoe"))
        sp.add_argument("--A", type=json.loads, default=None, help="cat matrix as JSON, e.g. [[2,1],[1,1]]")
        sp.add_argument("--lambda-u", dest="lambda_u", type=float, default=None)
        sp.add_argument("--lambda-s", dest="lambda_s", type=float, default=None)
        sp.add_argument("--config", default=None, help="JSON file with defaults for any option")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")

    sp = sub.add_parser("orbits", help="closed orbits up to a period, as CSV")
    common(sp)
    sp.add_argument("--tmax", type=float)

    for name in ("trace", "zeta"):
        sp = sub.add_parser(name, help=f"truncated {'trace sum' if name == 'trace' else 'zeta product'} as CSV")
        common(sp)
        sp.add_argument("--lambda", dest="lam", type=float, nargs=2, metavar=("RE", "IM"))
        sp.add_argument("--region", type=_parse_region)
        sp.add_argument("--grid", type=_parse_grid)
        sp.add_argument("--tmax", type=float)
        sp.add_argument("--potential", type=float, default=None, help="constant potential V")
        if name == "trace":
            sp.add_argument("--ell", type=int, default=None)

    sp = sub.add_parser("resonances", help="poles of the continued trace, as JSON")
    common(sp)
    sp.add_argument("--region", type=_parse_region)
    sp.add_argument("--grid", type=_parse_grid)

    sp = sub.add_parser("resolvent", help="transport resolvent on an x1-x2 grid, as CSV")
    common(sp)
    sp.add_argument("--lambda-re", dest="lambda_re", type=float)
    sp.add_argument("--lambda-im", dest="lambda_im", type=float)
    sp.add_argument("--f", dest="bump", default=None)
    sp.add_argument("--grid", type=_parse_grid)
    sp.add_argument("--x3", type=float, default=None)

    sp = sub.add_parser("verify", help="assumption checks, as JSON")
    common(sp)
    sp.add_argument("--tmax", type=float)
    return p


DEFAULTS = {
    "orbits": {"tmax": 6.0},
    "trace": {"tmax": 12.0, "ell": 0, "grid": (10, 10)},
    "zeta": {"tmax": 12.0, "grid": (10, 10)},
    "resonances": {"grid": (80, 80)},
    "resolvent": {"lambda_re": 1.0, "lambda_im": 0.0, "bump": "bump", "grid": 21, "x3": 0.0},
    "verify": {"tmax": 12.0},
}
MODEL_KEYS = ("model", "A", "lambda_u", "lambda_s")


def make_config(args: argparse.Namespace) -> RunConfig:
    cmd = args.command
    merged: dict = dict(DEFAULTS[cmd])
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        for k, v in cfg.items():
            if k == "region" and v is not None:
                v = normalize_region(v)
            if k == "grid" and isinstance(v, str):
                v = _parse_grid(v)
            merged[k] = v
    for k, v in vars(args).items():
        if k in ("command", "config") or v is None:
            continue
        merged[k] = v
    if not merged.get("model"):
        raise ConfigError("no model given (use --model or a config file)")
    model = {k: merged.pop(k) for k in MODEL_KEYS if k in merged}
    out = merged.pop("out", None)
    fmt_ = merged.pop("format", "json" if cmd in ("resonances", "verify") else "csv")
    return RunConfig(cmd, model, merged, out, fmt_)


def _grid_points(region, grid):
    nx, ny = (grid, grid) if isinstance(grid, int) else grid
    r0, r1, i0, i1 = region
    return [complex(x, y) for x in np.linspace(r0, r1, nx) for y in np.linspace(i0, i1, ny)]


def _label_text(label) -> str:
    if isinstance(label, str):
        return label
    if isinstance(label, tuple):
        return " ".join(f"{Fraction(p[0])}:{Fraction(p[1])}" for p in label)
    return str(label)


def cmd_orbits(model, p) -> tuple[str, int]:
    T = float(p["tmax"])
    rows = []
    for o in expand_repetitions(model.orbit_enumerator(T), T):
        rows.append([model.name, _label_text(o.label), fmt(o.primitive_period), o.repetition,
                     fmt(o.period), fmt(float(o.det_I_minus_P)), fmt(float(o.wedge(1)))])
    return _csv(["model", "label", "primitive_period", "repetition", "period", "det_I_minus_P", "tr_P"], rows), EXIT_OK


def _lambda_list(p):
    if p.get("lam") is not None:
        return [complex(*p["lam"])]
    if p.get("region") is None:
        raise ConfigError("give --lambda RE IM or --region with --grid")
    return _grid_points(p["region"], p["grid"])


def cmd_trace(model, p, zeta: bool = False) -> tuple[str, int]:
    rows = []
    for lam in _lambda_list(p):
        if zeta:
            tv = zeta_product(model, lam, p["tmax"], V=p.get("potential"))
        else:
            tv = trace_sum(model, lam, p["tmax"], int(p.get("ell", 0)), V=p.get("potential"))
        rows.append([fmt(lam.real), fmt(lam.imag), fmt(tv.value.real), fmt(tv.value.imag), fmt(tv.tail_estimate)])
    return _csv(["lambda_re", "lambda_im", "value_re", "value_im", "tail_estimate"], rows), EXIT_OK


def cmd_resonances(model, p) -> tuple[str, int]:
    if p.get("region") is None:
        raise ConfigError("resonances needs --region re_min,re_max,im_min,im_max")
    grid = p["grid"] if not isinstance(p["grid"], int) else (p["grid"], p["grid"])
    if model.resonance_oracle is not None:
        rep = verify_against_oracle(model, p["region"], grid, raise_on_failure=False)
        for msg in rep.failures:
            print(f"prflow: {msg}", file=sys.stderr)
        data = [_report_dict(r, model.name) for r in rep.found]
        return _json_encode(data) + "\n", EXIT_OK if rep.passed else EXIT_FAIL
    found = locate_resonances(continuation(model, pole_guard=0.0), p["region"], grid)
    return _json_encode([_report_dict(r, model.name) for r in found]) + "\n", EXIT_OK


def cmd_resolvent(model, p) -> tuple[str, int]:
    lam = complex(p["lambda_re"], p["lambda_im"])
    if not lam.real > 0:
        raise ConfigError("the resolvent integral needs Re lambda > 0")
    f = builtin_bump(p["bump"])
    n = p["grid"] if isinstance(p["grid"], int) else p["grid"][0]
    lo, hi = (-1.0, 1.0) if model.name == "basic" else (0.0, 1.0)
    rows = []
    for x1 in np.linspace(lo, hi, n):
        for x2 in np.linspace(lo, hi, n):
            x = np.array([x1, x2, float(p["x3"])])
            if model.has_boundary and not model.rho(x) > 0:
                continue
            r = resolvent_apply(model, f, lam, x, full_output=True)
            rows.append([fmt(x1), fmt(x2), fmt(x[2]), fmt(r.value.real), fmt(r.value.imag), fmt(r.error)])
    return _csv(["x1", "x2", "x3", "u_re", "u_im", "error"], rows), EXIT_OK


def verify_model(model, tmax: float = 12.0) -> dict:
    """Convexity, cone, trapped-set and orientability checks as a JSON-ready dict."""
    checks = {}
    conv = check_convexity(model)
    checks["convexity"] = conv.to_dict()
    ap, t0, factor = CONE_SETTINGS.get(model.name, (20.0, 1.0, 2.0))
    checks["cones"] = certify_cones(model, math.radians(ap), t0, factor).to_dict()
    if model.name == "basic":
        masks = trapped_set_approx(model, 201, 10.0)
        dist = mask_distances(model, masks)
        checks["trapped"] = {"check": "trapped", "T": 10.0, "hausdorff": dist,
                             "passed": all(d <= TRAPPED_TOL for d in dist.values())}
    else:
        m5 = trapped_set_approx(model, 32, 5.0)
        m10 = trapped_set_approx(model, 32, 10.0)
        nested = bool(np.all(m10.K <= m5.K) and np.all(m10.gamma_plus <= m5.gamma_plus)
                      and np.all(m10.gamma_minus <= m5.gamma_minus))
        entry = {"check": "trapped", "T": 10.0, "nested": nested, "K_fraction": float(m10.K.mean())}
        if not model.has_boundary:
            entry["all_trapped"] = bool(m10.K.all())
            nested = nested and entry["all_trapped"]
        entry["passed"] = nested
        checks["trapped"] = entry
    orbs = expand_repetitions(model.orbit_enumerator(tmax), tmax)
    try:
        beta = check_orientability(orbs)
        checks["orientability"] = {"check": "orientability", "passed": True, "beta": beta, "orbits": len(orbs)}
    except ValueError as exc:
        checks["orientability"] = {"check": "orientability", "passed": False, "beta": None, "error": str(exc)}
    # checks that do not apply report passed = None and are skipped
    passed = all(c["passed"] is not False for c in checks.values())
    return {"model": model.name, "passed": passed, "checks": checks}


def cmd_verify(model, p) -> tuple[str, int]:
    report = verify_model(model, float(p["tmax"]))
    return _json_encode(report) + "\n", EXIT_OK if report["passed"] else EXIT_FAIL


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


HANDLERS = {
    "orbits": cmd_orbits,
    "trace": cmd_trace,
    "zeta": lambda m, p: cmd_trace(m, p, zeta=True),
    "resonances": cmd_resonances,
    "resolvent": cmd_resolvent,
    "verify": cmd_verify,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = make_config(args)
        model = load_model(cfg.model)
        text, code = HANDLERS[cfg.command](model, cfg.params)
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"prflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
