"""Command-line front end.

Exit codes: 0 success, 1 bad input, 2 a step constraint was violated,
3 the projection solver failed, 4 a witness construction was invalid,
5 a witness ran but its expected predicate failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import config as cfgmod
from .config import ConfigError, RunConfig, load_config
from .engine import run_gawcga
from .errors import ConstraintViolation, ConstructionInvalid, GawcgaError, NonConvergence
from .schedules import Schedules
from .spaces import LqSpace
from .theory import SmoothnessModel, check_conditions, corollary_report, modulus_lp_bound, modulus_empirical
from .witnesses import WITNESS_NAMES, build_witness

TRACE_COLUMNS = [
    "step", "atom_index", "atom_sign", "residual_norm", "E_n",
    "margin_functional", "margin_select", "margin_approx",
]
TRUNCATION_NOTICE = (
    "finite truncation: the dictionary and element live on finitely many coordinates; "
    "divergence means the residual stayed above the floor for every computed step"
)


def fmt(x):
    """Seventeen significant digits, so doubles round-trip exactly."""
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, int):
        return str(x)
    return "%.17g" % float(x)


def dump_json(obj, indent=0):
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float) or hasattr(obj, "_mpf_") or type(obj).__module__ == "numpy":
        v = float(obj)
        return "%.17g" % v if math.isfinite(v) else "null"
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{dump_json(str(k))}: {dump_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(dump_json(v, indent + 1) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def trace_csv(trace):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for s in trace.steps:
        w.writerow([
            s.n, s.atom.label, s.atom.sign, fmt(s.residual_norm), fmt(s.E),
            fmt(s.margins["functional"]), fmt(s.margins["select"]), fmt(s.margins["approximant"]),
        ])
    return buf.getvalue()


def summarize(trace, floor=None, extra=None):
    norms = [float(r) for r in trace.residual_norms]
    out = {
        "status": trace.status,
        "steps": len(trace.steps),
        "initial_norm": norms[0],
        "final_residual": norms[-1],
        "min_residual": min(norms),
        "min_margin": trace.min_margin(),
        "policy": trace.policy,
        "dictionary_size": trace.dictionary_size,
        "truncation_notice": TRUNCATION_NOTICE,
        "residual_floor": floor,
        "diverged_at_horizon": (min(norms[1:] or norms) >= floor - 1e-9) if floor is not None else trace.status != "converged",
    }
    out.update(extra or {})
    return out


def _write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _apply_overrides(cfg, args):
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "max_steps", None) is not None:
        cfg.max_steps = args.max_steps
    if getattr(args, "stop_tol", None) is not None:
        cfg.stop_tol = args.stop_tol
    return cfg.validate()


def _load(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    return _apply_overrides(cfg, args)


def _run_instance(cfg, sched_override=None):
    """Build and run the configured problem; returns (trace, floor, extra)."""
    if "witness" in cfg.element:
        w = build_witness(cfg.element["witness"], cfg.element.get("params", {}))
        trace = run_gawcga(w.space, w.dictionary, w.f, w.sched, w.policy, min(cfg.max_steps, w.max_steps), cfg.stop_tol)
        checks = w.expected(trace)
        return trace, w.floor, {"witness": w.name, "checks": {k: v[0] for k, v in checks.items()}}
    space = cfgmod.build_space(cfg.space)
    f = cfgmod.build_element(cfg.element, cfg.seed, space)
    dictionary = cfgmod.build_dictionary(cfg.dictionary, space, f)
    sched = sched_override or cfgmod.build_schedules(cfg.schedules)
    sched.validate(cfg.max_steps + 1)
    policy = cfgmod.build_policy(cfg.policy, cfg.seed)
    return run_gawcga(space, dictionary, f, sched, policy, cfg.max_steps, cfg.stop_tol), None, {}


def cmd_run(args):
    cfg = _load(args)
    trace, floor, extra = _run_instance(cfg)
    _write(args.out, "trace.csv", trace_csv(trace))
    _write(args.out, "summary.json", dump_json(summarize(trace, floor, extra)) + "\n")
    return 0


def _parse_value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if "," in text:
        return [_parse_value(t) for t in text.split(",") if t]
    return text


def cmd_witness(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    name = args.name or cfg.witness.get("name")
    if name not in WITNESS_NAMES:
        raise ConfigError(f"witness: unknown name {name!r}; choose from {', '.join(WITNESS_NAMES)}")
    params = dict(cfg.witness.get("params", {}))
    for item in args.param or []:
        key, _, val = item.partition("=")
        if not _:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        params[key] = _parse_value(val)
    w = build_witness(name, params)
    res = w.run()
    extra = {
        "witness": name,
        "params": w.to_config(),
        "note": w.note,
        "checks": {k: {"ok": ok, "detail": d} for k, (ok, d) in res.checks.items()},
        "passed": res.passed,
    }
    _write(args.out, "trace.csv", trace_csv(res.trace))
    _write(args.out, "summary.json", dump_json(summarize(res.trace, w.floor, extra)) + "\n")
    print(f"{name}: {'predicate holds' if res.passed else 'predicate FAILED'}")
    return 0 if res.passed else 5


def cmd_check(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    chk = dict(cfg.check)
    p = float(args.p if args.p is not None else chk.get("p", 2.0))
    horizon = int(args.horizon if args.horizon is not None else chk.get("horizon", 200))
    alphas = args.alpha or chk.get("alphas", [1.0, 0.1, 0.01])
    if any(a <= 0 for a in alphas):
        raise ConfigError("check.alphas: every alpha must be positive")
    sched = cfgmod.build_schedules(cfg.schedules)
    q = p / (p - 1) if p > 1 else None
    model = SmoothnessModel("lp-upper-bound", q=q) if q else None
    report = check_conditions(sched, p, horizon, alphas, chk.get("thetas", (0.5, 0.25, 0.125)), model)
    data = report.to_dict()
    data["corollaries"] = corollary_report(sched, p, horizon)
    text = dump_json(data) + "\n"
    _write(args.out, "check.json", text)
    sys.stdout.write(text)
    return 0


def cmd_modulus(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    mod = dict(cfg.modulus)
    space = cfgmod.build_space(cfg.space) if args.q is None else LqSpace(args.q)
    us = args.u or mod.get("u", [0.1, 0.5, 1.0])
    samples = int(args.samples or mod.get("samples", 2000))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["u", "empirical_lower", "upper_bound"])
    for u in us:
        est = modulus_empirical(space, float(u), samples, cfg.seed)
        bound = modulus_lp_bound(space.q, float(u)) if isinstance(space, LqSpace) else float(u)
        w.writerow([fmt(u), fmt(est), fmt(bound)])
    _write(args.out, "modulus.csv", buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return 0


_EXIT = {ConstraintViolation: 2, NonConvergence: 3, ConstructionInvalid: 4}


def _sweep_row(cfg, index, point):
    base = cfgmod.build_schedules(cfg.schedules)
    from .schedules import Constant

    sched = Schedules(**{
        name: (Constant(float(point[name])) if name in point else getattr(base, name))
        for name in ("t", "t_prime", "delta", "delta_prime", "eta", "eta_prime")
    })
    try:
        trace, _, _ = _run_instance(cfg, sched)
        steps = len(trace.steps) if trace.status == "converged" else None
        return [index, *point.values(), trace.status, fmt(trace.final_residual), steps if steps is not None else "", ""]
    except (GawcgaError, ValueError) as exc:
        return [index, *point.values(), "error", "", "", f"{type(exc).__name__}: {exc}"]


def cmd_sweep(args):
    cfg = _load(args)
    grid = dict(cfg.sweep.get("grid", {}))
    bad = set(grid) - {"t", "t_prime", "delta", "delta_prime", "eta", "eta_prime"}
    if bad:
        raise ConfigError(f"sweep.grid: unknown parameters {sorted(bad)}")
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ConfigError("sweep.grid: the grid is empty")
    names = list(grid)
    points = [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]
    workers = int(cfg.sweep.get("workers", 4))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda ip: _sweep_row(cfg, *ip), enumerate(points)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["grid_index", *names, "status", "final_residual", "steps_to_tol", "error"])
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in r])
    _write(args.out, "sweep.csv", buf.getvalue())
    return 0 if any(r[len(names) + 1] != "error" for r in rows) else 3


def build_parser():
    parser = argparse.ArgumentParser(prog="gawcga", description="Greedy approximation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--max-steps", type=int)
        p.add_argument("--stop-tol", type=float)

    p = sub.add_parser("run", help="run the greedy algorithm on a configured problem")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("witness", help="run a named divergence witness")
    common(p)
    p.add_argument("name", nargs="?")
    p.add_argument("--param", action="append", help="witness parameter key=value (repeatable)")
    p.set_defaults(func=cmd_witness)
    p = sub.add_parser("check", help="evaluate convergence conditions for schedules")
    common(p)
    p.add_argument("--p", type=float)
    p.add_argument("--horizon", type=int)
    p.add_argument("--alpha", type=float, action="append")
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("modulus", help="estimate the modulus of smoothness")
    common(p)
    p.add_argument("--q", type=float)
    p.add_argument("--u", type=float, action="append")
    p.add_argument("--samples", type=int)
    p.set_defaults(func=cmd_modulus)
    p = sub.add_parser("sweep", help="run a grid of schedules concurrently")
    common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        return args.func(args)
    except ConstructionInvalid as exc:
        print(f"construction invalid: {exc}", file=sys.stderr)
        return 4
    except ConstraintViolation as exc:
        print(f"constraint violation: {exc}", file=sys.stderr)
        return 2
    except NonConvergence as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
