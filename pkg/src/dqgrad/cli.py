"""Command line front end.

Subcommands:
  sweep      run the experiments in a config file, emit CSV/SVG
  bounds     print the closed-form contraction curves for a (kappa, n) pair
  verify     run the invariant self-checks
  waterfill  sum-rate allocation for given smoothness constants
"""

import argparse
import sys

from . import bounds as bmod
from .configfile import ConfigError, load_experiments
from .harness import emit_csv, emit_svg, run_sweep
from .schedules import waterfill


def _cmd_sweep(args):
    try:
        configs = load_experiments(args.config, args.section)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for config in configs:
        if args.jobs:
            config = type(config)(**{**config.__dict__, "jobs": args.jobs})
        print(f"[{config.name}] {len(config.algos)} algos x "
              f"{len(config.rates)} rates x {config.trials} trials")
        rows = run_sweep(config)
        for r in rows:
            print(f"  {r.algo:8s} R={r.R:<3d} emp={r.emp_mean:.4f} "
                  f"[{r.emp_p05:.4f}, {r.emp_p95:.4f}] bound={min(r.bound, 1):.4f}")
        try:
            if config.csv:
                emit_csv(rows, config.csv)
                print(f"  wrote {config.csv}")
            if config.svg:
                emit_svg(rows, config.svg, title=config.name)
                print(f"  wrote {config.svg}")
        except OSError as exc:
            print(f"error writing output: {exc}", file=sys.stderr)
            return 1
    return 0


def _cmd_bounds(args):
    from .hyperparams import gamma_agd, gamma_hb, sigma_agd, sigma_gd, sigma_hb

    rho = args.rho if args.rho is not None else bmod.default_rho(args.n)
    algos = args.algos.split(",") if args.algos else list(bmod.QUANTIZED_ALGOS)
    header = "R " + " ".join(f"{a:>10s}" for a in algos) + f" {'conv-gd':>10s} {'conv-gm':>10s}"
    print(f"kappa={args.kappa} n={args.n} rho={rho:g}")
    print(header)
    for R in range(args.rmin, args.rmax + 1):
        vals = [bmod.clip_for_plot(bmod.achievable_rate(a, args.kappa, args.n, R, rho))
                for a in algos]
        row = f"{R:<2d}" + " ".join(f"{v:10.6f}" for v in vals)
        row += f" {bmod.converse_curve('gd', args.kappa, R):10.6f}"
        row += f" {bmod.converse_curve('gm', args.kappa, R):10.6f}"
        print(row)
    schemes = (("dq-gd", sigma_gd(args.kappa), 0.0),
               ("dq-agd", sigma_agd(args.kappa), gamma_agd(args.kappa)),
               ("dq-hb", sigma_hb(args.kappa), gamma_hb(args.kappa)))
    for name, sigma, gamma in schemes:
        r1, r2 = bmod.thresholds(args.n, sigma, gamma, rho)
        r2_text = f"{r2:.3f}" if r2 is not None else "n/a (one-step convergence)"
        print(f"{name}: linear convergence above R1={r1:.3f}, "
              f"matches unquantized at R2={r2_text}")
    return 0


def _cmd_verify(args):
    from .selfcheck import run_verification

    results = run_verification(quick=not args.full)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        print(f"[{status}] {name}{suffix}")
        failed += not ok
    return 1 if failed else 0


def _cmd_waterfill(args):
    try:
        L = [float(v) for v in args.L.split(",")]
        nu, rates = waterfill(L, args.R)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"nu = {nu:.12g}")
    for k, (Lk, Rk) in enumerate(zip(L, rates)):
        print(f"worker {k}: L={Lk:g} R={Rk:.12g} bits/dimension")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dqgrad",
        description="Quantized gradient descent experiments on a "
                    "rate-limited worker/server channel.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run experiments from a config file")
    p.add_argument("config", help="INI config; one section per experiment")
    p.add_argument("--section", help="run only this section")
    p.add_argument("--jobs", type=int, default=0, help="parallel trial workers")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bounds", help="print theory curves")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, default=None,
                   help="covering efficiency (default sqrt(n))")
    p.add_argument("--rmin", type=int, default=1)
    p.add_argument("--rmax", type=int, default=8)
    p.add_argument("--algos", help="comma list, default all quantized schemes")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("verify", help="run the invariant self-checks")
    p.add_argument("--full", action="store_true", help="larger sample sizes")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("waterfill", help="sum-rate allocation")
    p.add_argument("--L", required=True, help="comma list of smoothness constants")
    p.add_argument("--R", type=float, required=True, help="total rate budget")
    p.set_defaults(func=_cmd_waterfill)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
