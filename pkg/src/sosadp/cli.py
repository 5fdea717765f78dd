"""Command-line front end: ``sosadp <command> [options]``.

Exit codes: 0 success, 1 a requested check failed, 2 usage or input error,
3 the SDP solver did not return an optimal point.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .bellman import FitError, ValueApprox, fit_value, fitting_sdp, verify_bellman
from .config import ConfigError, RunConfig, default_weights, load_config, parse_weight
from .oracles import OracleError, value_iteration_1d
from .parse import ParseError
from .problems import BUILTIN, scenario, scenarios
from .sdpa import export_sdpa
from .simulate import (RolloutDivergence, estimate_cost, scenario_rows, simulate_scenario, trajectory_rows,
                       write_csv)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_SDP = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _even_degree(text: str) -> int:
    try:
        d = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"degree must be an integer, got {text!r}") from None
    if d < 2 or d % 2:
        raise argparse.ArgumentTypeError(f"degree must be even and at least 2, got {d}")
    return d


def _vector(text: str):
    try:
        return tuple(float(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _run_config(args) -> RunConfig:
    """Merge ``--config`` / ``--problem`` with command-line overrides."""
    if args.config and args.problem:
        raise UsageError("give --problem or --config, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.problem:
        if args.problem not in BUILTIN:
            raise UsageError(f"unknown problem {args.problem!r}; built-ins are {sorted(BUILTIN)}")
        cfg = RunConfig(BUILTIN[args.problem]())
    else:
        raise UsageError("one of --problem or --config is required")
    for attr in ("degree", "seed", "rollouts", "horizon", "x0", "samples", "tol"):
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, attr, val)
    if getattr(args, "mult_degree", None) is not None:
        cfg.multiplier_degree = args.mult_degree
    if getattr(args, "convex", False):
        cfg.convex = True
    if getattr(args, "discount", None) is not None:
        cfg.problem = cfg.problem.replace(discount=args.discount)
    weights = getattr(args, "weight", None)
    if weights and len(weights) == 1 and args.command != "family":
        prob = cfg.problem
        cfg.problem = prob.replace(weight=parse_weight(weights[0], prob.weight.box, prob.n))
    if getattr(args, "out", None):
        cfg.out = args.out
    return cfg


def _emit(report: dict, out_dir=None, name="report.json"):
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text + "\n")


def _fit(cfg: RunConfig, degree=None, prob=None) -> ValueApprox:
    return fit_value(prob or cfg.problem, degree or cfg.degree, convex=cfg.convex,
                     multiplier_degree=cfg.multiplier_degree, tol=cfg.tol, max_iter=cfg.max_iter)


def _load_value(path, prob) -> ValueApprox:
    with open(path) as fh:
        v = ValueApprox.from_json(fh.read())
    if v.n != prob.n:
        raise UsageError(f"value artifact has {v.n} states, problem has {prob.n}")
    return v


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args) -> int:
    cfg = _run_config(args)
    v = _fit(cfg)
    report = {"command": "fit", "problem": cfg.problem.name, "degree": v.degree, "convex": v.convexity_enforced,
              "status": v.status, "objective": v.objective_value, "gap": v.gap, "backoff": v.backoff,
              "polynomial": str(v.polynomial()), "solve_seconds": v.diagnostics.get("solve_seconds")}
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, "value.json"), "w") as fh:
            fh.write(v.to_json() + "\n")
        report["artifact"] = os.path.join(cfg.out, "value.json")
    _emit(report, cfg.out)
    return EXIT_OK


def cmd_family(args) -> int:
    cfg = _run_config(args)
    prob = cfg.problem
    if prob.n != 1:
        raise UsageError("family plots need a problem with one state")
    weights = args.weight or default_weights()
    degrees = args.degrees or [2, 4]
    jobs = [(d, w) for d in degrees for w in weights]

    def one(job):
        d, w = job
        p = prob.replace(weight=parse_weight(w, prob.weight.box, 1))
        return _fit(cfg, d, p)

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        fits = list(pool.map(one, jobs))
    lo, hi = prob.state_box()
    xs = np.linspace(lo[0], hi[0], 401)
    cols = [v(xs[:, None]) for v in fits]
    header = ["x"] + [f"deg{d}[{w}]" for d, w in jobs]
    if args.oracle:
        vstar = value_iteration_1d(prob, points=args.points)
        cols.append(vstar(xs))
        header.append("vstar")
    path = os.path.join(cfg.out or ".", "family.csv")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    write_csv(path, header, np.column_stack([xs] + cols))
    report = {"command": "family", "csv": path, "columns": header,
              "objectives": {h: v.objective_value for h, v in zip(header[1:], fits)}}
    _emit(report, cfg.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _run_config(args)
    prob = cfg.problem
    v = _load_value(args.value, prob) if args.value else _fit(cfg)
    out = cfg.out
    if args.scenario:
        if prob.name != "helicopter10":
            raise UsageError("scenarios are defined for the helicopter10 problem")
        scen = scenario(args.scenario)
        trace = simulate_scenario(v, scen, seed=cfg.seed, noise=not args.no_noise, x0=cfg.x0)
        err = trace.x[:, :3] - trace.ref
        report = {"command": "simulate", "scenario": scen.name, "steps": len(trace.u),
                  "max_abs_position_error": np.max(np.abs(err), axis=0).tolist(),
                  "final_position_error": float(np.linalg.norm(err[-1]))}
        if out:
            os.makedirs(out, exist_ok=True)
            write_csv(os.path.join(out, "trajectory.csv"), *scenario_rows(trace))
        _emit(report, out)
        return EXIT_OK
    x0 = np.asarray(cfg.x0 if cfg.x0 is not None else np.zeros(prob.n), float)
    if len(x0) != prob.n:
        raise UsageError(f"--x0 needs {prob.n} entries")
    rep = estimate_cost(prob, v, x0, n_rollouts=cfg.rollouts, horizon=cfg.horizon, seed=cfg.seed,
                        noise=not args.no_noise, keep=bool(out))
    report = {"command": "simulate", "problem": prob.name, "x0": x0.tolist(), **rep.to_dict()}
    if out:
        os.makedirs(out, exist_ok=True)
        write_csv(os.path.join(out, "trajectory.csv"), *trajectory_rows(rep.trajectories[0]))
    _emit(report, out)
    return EXIT_OK if rep.bound_holds and rep.n_diverged == 0 else EXIT_CHECK


def cmd_oracle(args) -> int:
    cfg = _run_config(args)
    prob = cfg.problem
    if prob.n != 1:
        raise UsageError("the value-iteration oracle supports one-state problems only")
    g = value_iteration_1d(prob, lo=args.lo, hi=args.hi, points=args.points)
    path = os.path.join(cfg.out or ".", "oracle.csv")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    write_csv(path, ["x", "vstar"], np.column_stack([g.grid, g.values]))
    _emit({"command": "oracle", "csv": path, "points": len(g.values), "iterations": g.iterations,
           "final_change": g.history[-1]}, cfg.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _run_config(args)
    v = _load_value(args.value, cfg.problem)
    rep = verify_bellman(v, cfg.problem, samples=cfg.samples, seed=cfg.seed, tolerance=args.tolerance)
    _emit({"command": "verify", **rep.to_dict()}, cfg.out)
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_export_sdpa(args) -> int:
    cfg = _run_config(args)
    sdp = fitting_sdp(cfg.problem, cfg.degree, cfg.convex, cfg.multiplier_degree)[0]
    text = export_sdpa(sdp, comment=f"{cfg.problem.name} degree {cfg.degree} (normalized coordinates)")
    path = os.path.join(cfg.out or ".", f"{cfg.problem.name}_d{cfg.degree}.dat-s")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)
    _emit({"command": "export-sdpa", "path": path, "constraints": sdp.m, "blocks": list(sdp.block_sizes)})
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sosadp", description="Polynomial value-function lower bounds via SOS.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, degree=True):
        p.add_argument("--problem", help=f"built-in problem: {', '.join(sorted(BUILTIN))}")
        p.add_argument("--config", help="problem/run config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--discount", type=float, help="override the discount factor")
        p.add_argument("--weight", action="append", help="'uniform' or a density polynomial in x")
        if degree:
            p.add_argument("--degree", type=_even_degree)
            p.add_argument("--convex", action="store_true", help="enforce convexity of the fit")
            p.add_argument("--mult-degree", type=int, dest="mult_degree")
            p.add_argument("--tol", type=float)

    p = sub.add_parser("fit", help="fit a value-function lower bound")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("family", help="fits for several weights and degrees as CSV")
    common(p, degree=False)
    p.add_argument("--degree", type=_even_degree, action="append", dest="degrees")
    p.add_argument("--convex", action="store_true")
    p.add_argument("--mult-degree", type=int, dest="mult_degree")
    p.add_argument("--tol", type=float)
    p.add_argument("--oracle", action="store_true", help="append the value-iteration column")
    p.add_argument("--points", type=int, default=3201)
    p.add_argument("--jobs", type=int, default=2)
    p.set_defaults(func=cmd_family)

    p = sub.add_parser("simulate", help="Monte Carlo rollouts or a helicopter scenario")
    common(p)
    p.add_argument("--value", help="value artifact (fit on the fly when omitted)")
    p.add_argument("--scenario", choices=[s.name for s in scenarios()])
    p.add_argument("--x0", type=_vector)
    p.add_argument("--seed", type=int)
    p.add_argument("--rollouts", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--no-noise", action="store_true", dest="no_noise")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="value iteration on a grid (one state)")
    common(p, degree=False)
    p.add_argument("--lo", type=float, default=-24.0)
    p.add_argument("--hi", type=float, default=24.0)
    p.add_argument("--points", type=int, default=3201)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="sample the Bellman inequality of a value artifact")
    common(p, degree=False)
    p.add_argument("--value", required=True)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-sdpa", help="write the fitting SDP in SDPA sparse format")
    common(p)
    p.set_defaults(func=cmd_export_sdpa)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except FitError as exc:
        print(json.dumps({"command": args.command, "error": str(exc), "status": exc.status}), file=sys.stderr)
        return EXIT_SDP
    except (UsageError, ConfigError, ParseError, OracleError, KeyError, OSError) as exc:
        print(f"sosadp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RolloutDivergence as exc:
        print(f"sosadp {args.command}: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
