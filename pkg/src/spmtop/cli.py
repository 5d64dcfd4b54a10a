"""Command-line interface: simulate, bounds, selftest."""

from __future__ import annotations

import argparse
import sys

from .bounds import bound_report
from .core import SpmTopError, channel_params
from .engine import HAVE_KERNEL, resolve_backend
from .harness import default_gamma, emit_report, monte_carlo


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="run Monte Carlo trials at one grid point")
    p.add_argument("--k", type=int, required=True, help="message length in bits")
    p.add_argument("--p", type=float, required=True, help="crossover probability")
    p.add_argument("--epsilon", type=float, required=True,
                   help="target frame error rate")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stopping", choices=["standard", "randomized"],
                   default="standard")
    p.add_argument("--gamma", type=float, default=None,
                   help="randomization weight; default is calibrated from "
                        "(p, epsilon) when --stopping randomized")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=["auto", "compiled", "python"],
                   default="auto")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", type=str, default=None,
                   help="write the report to a file instead of stdout")


def _add_bounds(sub):
    p = sub.add_parser("bounds", help="tabulate blocklength bounds over k")
    p.add_argument("--k-min", type=int, required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", type=str, default=None)


def _add_selftest(sub):
    sub.add_parser("selftest", help="quick internal consistency check")


def _cmd_simulate(args) -> int:
    params = channel_params(args.p)
    gamma = 0.0
    if args.stopping == "randomized":
        gamma = (default_gamma(params, args.epsilon)
                 if args.gamma is None else args.gamma)
    stats = monte_carlo(args.k, params, args.epsilon, args.trials, args.seed,
                        gamma=gamma, backend=args.backend,
                        workers=args.workers)
    text = emit_report([stats], fmt=args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_bounds(args) -> int:
    import json

    params = channel_params(args.p)
    rows = []
    for k in range(args.k_min, args.k_max + 1):
        r = bound_report(k, args.epsilon, params)
        rows.append({
            "K": k, "p": f"{args.p:.6g}", "epsilon": f"{args.epsilon:.6g}",
            "N": r.n, "p_f": f"{r.p_f:.6g}",
            "yang": f"{r.yang:.6g}", "thm1": f"{r.thm1:.6g}",
            "sead": f"{r.sead:.6g}",
            "systematic_binomial": f"{r.systematic_binomial:.6g}",
        })
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        keys = list(rows[0].keys())
        lines = [",".join(keys)]
        lines += [",".join(str(row[key]) for key in keys) for row in rows]
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_selftest(args) -> int:
    params = channel_params(0.11)
    stats = monte_carlo(8, params, 1e-3, 200, seed=1, validate=True)
    ok = stats.sead_violations == 0 and stats.fer <= 0.05
    backend = resolve_backend("auto")
    if backend == "compiled":
        ref = monte_carlo(8, params, 1e-3, 200, seed=1, validate=True,
                          backend="python")
        ok = ok and (ref.sum_tau, ref.errors, ref.ops_partition,
                     ref.ops_update, ref.fallbacks) == (
                         stats.sum_tau, stats.errors, stats.ops_partition,
                         stats.ops_update, stats.fallbacks)
    print(f"backend={backend} kernel_built={HAVE_KERNEL} "
          f"mean_tau={stats.mean_tau:.3f} fer={stats.fer:.4f} "
          f"sead_violations={stats.sead_violations}")
    print("selftest: OK" if ok else "selftest: FAILED")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spmtop",
        description="Posterior-matching feedback codes on the binary "
                    "symmetric channel")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_bounds(sub)
    _add_selftest(sub)
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "bounds":
            return _cmd_bounds(args)
        return _cmd_selftest(args)
    except SpmTopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
