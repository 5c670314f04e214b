"""Command-line entry point: gen-mdp, run, oracle, slope, check."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .criteria import MaxMinBifunction, SmoothScalarizer
from .harness import (fit_loglog_slope, load_config, read_csv_column, run_experiment,
                      write_outputs)
from .mdp import load_mdp, random_mdp, save_mdp


def _cmd_gen_mdp(args) -> int:
    mdp = random_mdp(args.seed, args.states, args.actions, args.objectives, args.gamma)
    save_mdp(mdp, args.output)
    return 0


def _cmd_run(args) -> int:
    config = load_config(args.config)
    result = run_experiment(config, base_dir=Path(args.config).resolve().parent)
    out = args.output or config.get("output")
    if out is None:
        raise ValueError("no output path: pass -o or set 'output' in the config")
    write_outputs(result, out)
    return 0


def _cmd_oracle(args) -> int:
    from .oracle import cmdp_lp, maxmin_lp, smooth_fw

    mdp = load_mdp(args.mdp)
    m = mdp.num_objectives
    if args.criterion == "cmdp":
        b = args.b if args.b is not None else [0.0] * (m - 1)
        sol = cmdp_lp(mdp, b)
        doc = {"criterion": "cmdp", "status": sol.status, "b": b}
        if sol.optimal:
            doc.update(value=sol.value, duals=sol.duals.tolist(),
                       residuals={k: float(v) for k, v in sol.residuals.items()})
    elif args.criterion == "maxmin":
        c = args.c if args.c is not None else [1.0] * m
        sol = maxmin_lp(mdp, MaxMinBifunction(tuple(c)).c)
        doc = {"criterion": "maxmin", "status": sol.status, "c": c}
        if sol.optimal:
            doc.update(value=sol.value, weights=sol.duals.tolist(),
                       residuals={k: float(v) for k, v in sol.residuals.items()})
    else:
        F = SmoothScalarizer(args.scalarizer, tuple(args.weights or [1.0] * m), args.delta)
        res = smooth_fw(mdp, F, tol=args.tol)
        doc = {"criterion": "smooth", "scalarizer": F.kind, "weights": list(F.weights),
               "delta": F.delta, "value": res.value, "values": res.values.tolist(),
               "gap": res.gap, "iterations": res.iterations, "converged": res.converged}
    print(json.dumps(doc, indent=2))
    return 0 if doc.get("status", "optimal") == "optimal" or "value" in doc else 1


def _cmd_slope(args) -> int:
    x, y = read_csv_column(args.input, args.column, x=args.x, seed=args.seed)
    lo = args.from_ if args.from_ is not None else float("-inf")
    hi = args.to if args.to is not None else float("inf")
    print(fit_loglog_slope(x, y, (lo, hi)).line())
    return 0


def _cmd_check(args) -> int:
    from .checks import run_all

    results = run_all(quick=not args.full)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arnpg", description="Tabular multi-objective NPG lab")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-mdp", help="write a seeded random MDP as JSON")
    g.add_argument("--states", type=int, required=True)
    g.add_argument("--actions", type=int, required=True)
    g.add_argument("--objectives", type=int, required=True)
    g.add_argument("--gamma", type=float, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=_cmd_gen_mdp)

    r = sub.add_parser("run", help="run an experiment config and write metrics CSV")
    r.add_argument("--config", required=True)
    r.add_argument("-o", "--output")
    r.set_defaults(func=_cmd_run)

    o = sub.add_parser("oracle", help="solve for the optimal value of a criterion")
    o.add_argument("--mdp", required=True)
    o.add_argument("--criterion", choices=["cmdp", "maxmin", "smooth"], required=True)
    o.add_argument("--b", type=float, nargs="+")
    o.add_argument("--c", type=float, nargs="+")
    o.add_argument("--scalarizer", choices=["sum-log", "weighted-linear"], default="sum-log")
    o.add_argument("--weights", type=float, nargs="+")
    o.add_argument("--delta", type=float, default=0.1)
    o.add_argument("--tol", type=float, default=1e-9)
    o.set_defaults(func=_cmd_oracle)

    s = sub.add_parser("slope", help="log-log slope of a CSV column against T")
    s.add_argument("--input", required=True)
    s.add_argument("--column", required=True)
    s.add_argument("--from", dest="from_", type=float)
    s.add_argument("--to", type=float)
    s.add_argument("--x", default="T")
    s.add_argument("--seed", help="seed rows to use (default: mean rows if present)")
    s.set_defaults(func=_cmd_slope)

    c = sub.add_parser("check", help="run the randomized lemma and property suites")
    c.add_argument("--full", action="store_true", help="use the larger sample sizes")
    c.set_defaults(func=_cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as err:
        print(f"arnpg {args.command}: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
