"""Compare the compiled trial kernel against the pure-Python codec.

Runs the same seeded trials on both backends, asserts the outputs are
identical, and reports per-trial timings.

Usage: python3 benchmarks/bench_kernel.py [--k 99] [--trials 300] [--seed 17]
"""

from __future__ import annotations

import argparse
import time

from spmtop.channel import draw_message, fork_stream
from spmtop.core import BinomTable, binom_table, channel_params
from spmtop.engine import HAVE_KERNEL, run_trial


def bench(backend: str, k: int, trials: int, seed: int, epsilon: float,
          params, table) -> tuple[float, list]:
    records = []
    t0 = time.perf_counter()
    for trial in range(trials):
        theta = draw_message(seed, trial, k)
        channel = fork_stream(seed, trial, params)
        records.append(run_trial(theta, k, params, epsilon, channel,
                                 table=table, backend=backend))
    return time.perf_counter() - t0, records


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=99)
    ap.add_argument("--p", type=float, default=0.11)
    ap.add_argument("--epsilon", type=float, default=1e-3)
    ap.add_argument("--trials", type=int, default=300)
    ap.add_argument("--seed", type=int, default=17)
    args = ap.parse_args()

    params = channel_params(args.p)
    table = binom_table(args.k) if args.k <= 64 else BinomTable(args.k)
    t_py, rec_py = bench("python", args.k, args.trials, args.seed,
                         args.epsilon, params, table)
    print(f"python  : {t_py / args.trials * 1e3:8.3f} ms/trial "
          f"({args.trials} trials, K={args.k}, p={args.p})")
    if not HAVE_KERNEL:
        print("compiled: kernel not built; skipping")
        return 0
    t_c, rec_c = bench("compiled", args.k, args.trials, args.seed,
                       args.epsilon, params, table)
    print(f"compiled: {t_c / args.trials * 1e3:8.3f} ms/trial "
          f"(speedup {t_py / t_c:.2f}x)")
    assert rec_py == rec_c, "backends disagree; bit-compatibility broken"
    print("outputs : identical records on both backends")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
