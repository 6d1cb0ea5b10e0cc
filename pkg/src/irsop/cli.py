"""Command-line interface: ``irsop {op,sweep,verify,compensate}``.

Settings resolve as flags > config file > built-in defaults.
Exit codes: 0 success, 2 configuration error, 3 infeasible grid point or
unreachable compensation target (partial results are still written).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

from . import experiments as ex
from . import moments as mom
from .errors import ConfigError, DomainError, SearchRangeError
from .model import LinkGains, SystemConfig
from .oracle import format_report, verify_closed_forms

log = logging.getLogger("irsop")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3


def _scenario_args(p):
    g = p.add_argument_group("scenario overrides")
    g.add_argument("--config", help="TOML file with [system]/[geometry]/[sweep]/[mc] sections")
    g.add_argument("-M", type=int)
    g.add_argument("-N", type=int)
    g.add_argument("-K", type=int)
    g.add_argument("--beta", type=float)
    g.add_argument("--p-dbm", type=float)
    g.add_argument("--noise-dbm", type=float)
    g.add_argument("--irs", type=float, nargs=2, metavar=("X", "Y"))
    g.add_argument("--user-seed", type=int)
    g.add_argument("--threshold-db", type=float)
    g.add_argument("--variant", choices=mom.VARIANTS)
    g.add_argument("--phase", choices=("uniform", "zero"))
    g.add_argument("--empirical-moments", nargs="+", choices=mom.EMPIRICAL_FIELDS,
                   help="replace these closed forms by Monte-Carlo estimates")
    g.add_argument("--moment-trials", type=int, help="trials per user for --empirical-moments")
    g.add_argument("--mc-trials", type=int, help="Monte-Carlo trials for the empirical overlay (0 = off)")
    g.add_argument("--seed", type=int, help="fading seed")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("-o", "--output", help="CSV output path (default stdout)")


def _resolve(args) -> dict:
    cfg = ex.load_config(args.config) if args.config else {"scenario": ex.Scenario(), "sweep": {}, "mc": {}}
    over = {}
    for flag, field in (("M", "M"), ("N", "N"), ("K", "K"), ("beta", "beta"), ("p_dbm", "p_dbm"),
                        ("noise_dbm", "noise_dbm"), ("user_seed", "user_seed"),
                        ("threshold_db", "threshold_db"), ("variant", "variant"), ("phase", "phase"),
                        ("moment_trials", "moment_trials")):
        v = getattr(args, flag, None)
        if v is not None:
            over[field] = v
    if getattr(args, "empirical_moments", None):
        over["empirical_moments"] = tuple(args.empirical_moments)
    if getattr(args, "irs", None) is not None:
        over["irs"] = tuple(args.irs)
    if "K" in over and cfg["scenario"].users is not None and len(cfg["scenario"].users) != over["K"]:
        raise ConfigError("-K conflicts with explicit user positions in the config file")
    cfg["scenario"] = cfg["scenario"].replace(**over)
    return cfg


def _write(result, path):
    if path:
        with open(path, "w", newline="") as fh:
            ex.write_csv(result, fh)
    else:
        ex.write_csv(result, sys.stdout)


def cmd_op(args):
    cfg = _resolve(args)
    sc = cfg["scenario"]
    grid = tuple(args.thresholds_db) if args.thresholds_db else sc.thresholds_db
    spec = ex.sweep_spec_from(cfg, variable="threshold_db", grid=grid,
                              mc_trials=args.mc_trials, seed=args.seed)
    result = ex.run_sweep(spec, args.workers)
    _write(result, args.output)
    return EXIT_INFEASIBLE if result.infeasible else EXIT_OK


def cmd_sweep(args):
    cfg = _resolve(args)
    spec = ex.sweep_spec_from(cfg, variable=args.variable, grid=args.grid,
                              mc_trials=args.mc_trials, seed=args.seed)
    result = ex.run_sweep(spec, args.workers)
    _write(result, args.output)
    if result.infeasible:
        log.error("infeasible analytic fit at one or more grid points")
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_verify(args):
    rows = []
    out = []
    for M in args.M:
        for N in args.N:
            for K in args.K:
                cfg = SystemConfig(M=M, N=N, K=K, P=float(K), sigma2=args.sigma2)
                gains = LinkGains(args.alpha_sr, (args.alpha_r,) * K)
                rep = verify_closed_forms(cfg, gains, args.trials, args.seed, args.z, 0, args.workers)
                out.append(format_report(rep))
                for r in rep.rows:
                    rows.append((M, N, K, r.formula, r.closed_form, r.estimate, r.std_error, r.z, r.verdict))
                print(out[-1], "\n", flush=True)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            meta = {"trials": args.trials, "seed": args.seed, "z_threshold": args.z,
                    "alpha_sr": args.alpha_sr, "alpha_r": args.alpha_r, "sigma2": args.sigma2,
                    "power_scale": 1.0, "pipeline_variant": mom.DEFAULT_VARIANT}
            for key, val in meta.items():
                fh.write(f"# {key} = {json.dumps(val)}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("M", "N", "K", "formula", "closed_form", "estimate", "std_error", "z", "verdict"))
            for r in rows:
                w.writerow([*r[:4], *(f"{v:.10g}" for v in r[4:8]), r[8]])
    return EXIT_OK


def cmd_compensate(args):
    cfg = _resolve(args)
    sc = cfg["scenario"]
    metric = args.metric
    ref = sc.replace(irs=(args.x_ref, sc.irs[1]), N=args.n_ref)
    target = ex.analytic_op(ref, metric)
    moved = sc.replace(irs=(args.x, sc.irs[1]))
    print(f"# metric={metric} threshold_db={sc.threshold_db:g} variant={sc.variant}")
    print(f"reference: x_R={args.x_ref:g} N={args.n_ref} OP={target:.10g}")
    try:
        n, op = ex.find_compensating_N(moved, target, (args.n_min, args.n_max), metric)
    except SearchRangeError as e:
        print(f"moved: x_R={args.x:g} target unreachable ({e})")
        return EXIT_INFEASIBLE
    print(f"moved: x_R={args.x:g} N={n} OP={op:.10g}")
    print(f"delta_N={n - args.n_ref}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="irsop", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("op", help="analytic (and optional Monte-Carlo) OP of one scenario")
    _scenario_args(s)
    s.add_argument("--thresholds-db", type=float, nargs="+")
    s.set_defaults(func=cmd_op)

    s = sub.add_parser("sweep", help="sweep IRS position, element count or threshold")
    _scenario_args(s)
    s.add_argument("--variable", choices=ex.SWEEP_VARIABLES)
    s.add_argument("--grid", type=float, nargs="+")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("verify", help="audit closed-form moments against Monte Carlo")
    s.add_argument("-M", type=int, nargs="+", default=[1, 2, 3])
    s.add_argument("-N", type=int, nargs="+", default=[1, 2, 4])
    s.add_argument("-K", type=int, nargs="+", default=[2, 3])
    s.add_argument("--trials", type=int, default=10_000_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--z", type=float, default=4.0)
    s.add_argument("--alpha-sr", type=float, default=1.0)
    s.add_argument("--alpha-r", type=float, default=1.0)
    s.add_argument("--sigma2", type=float, default=1.0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--csv", help="machine-readable report path")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("compensate", help="extra IRS elements needed after moving the IRS")
    _scenario_args(s)
    s.add_argument("--x-ref", type=float, default=0.0)
    s.add_argument("--x", type=float, default=75.0)
    s.add_argument("--n-ref", type=int, default=50)
    s.add_argument("--n-min", type=int, default=1)
    s.add_argument("--n-max", type=int, default=2000)
    s.add_argument("--metric", default="worst", help="mean, worst, or a user index")
    s.set_defaults(func=cmd_compensate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
