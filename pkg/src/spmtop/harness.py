"""Monte Carlo harness: seeded trial sweeps, aggregation, and reports.

Each trial gets its own counter-based substream keyed by (seed, trial_id), so
results are identical no matter how trials are sharded across workers.  All
accumulators are exact integers (channel-use, error, and operation counts);
derived statistics are computed once at the end, which keeps reports
byte-stable across runs and worker counts.
"""

from __future__ import annotations

import io
import json
import math
import multiprocessing
from dataclasses import dataclass

from .channel import draw_message, fork_stream
from .core import BinomTable, ChannelParams, SpmTopError, binom_table
from .engine import run_trial


@dataclass(frozen=True)
class SimStats:
    """Aggregated outcome of a trial sweep; raw sums stay exact integers."""

    k: int
    params: ChannelParams
    epsilon: float
    trials: int
    seed: int
    gamma: float
    sum_tau: int
    errors: int
    ops_partition: int
    ops_update: int
    fallbacks: int
    sead_violations: int
    partitions: int

    @property
    def mean_tau(self) -> float:
        return self.sum_tau / self.trials

    @property
    def rate(self) -> float:
        return self.k * self.trials / self.sum_tau

    @property
    def fer(self) -> float:
        return self.errors / self.trials

    @property
    def fer_ci(self) -> tuple[float, float]:
        """Wilson 95% interval for the frame error rate."""
        z = 1.959963984540054
        n = self.trials
        if self.errors == 0:
            # closed form with phat = 0; avoids a cancellation artifact
            return 0.0, min(z * z / (n + z * z), 1.0)
        phat = self.errors / n
        denom = 1.0 + z * z / n
        center = (phat + z * z / (2.0 * n)) / denom
        half = (z / denom) * math.sqrt(phat * (1.0 - phat) / n
                                       + z * z / (4.0 * n * n))
        return max(center - half, 0.0), min(center + half, 1.0)

    @property
    def ops_partition_per_symbol(self) -> float:
        return self.ops_partition / self.sum_tau

    @property
    def ops_update_per_symbol(self) -> float:
        return self.ops_update / self.sum_tau

    @property
    def fallbacks_per_trial(self) -> float:
        return self.fallbacks / self.trials


def default_gamma(params: ChannelParams, epsilon: float) -> float:
    """Randomization weight that interpolates the error rate onto epsilon.

    A confirmation round ending at the top level N leaves error probability
    e_N = (s - 1) / (s^(N+1) - 1) with s = q/p; the ceiling rule overshoots
    (e_N < epsilon <= e_(N-1)), so choosing the shorter walk with probability
    gamma = (epsilon - e_N) / (e_(N-1) - e_N) matches the target on average.
    """
    from .core import confirmation_steps

    n = confirmation_steps(params, epsilon)
    if n < 2:
        return 0.0
    s = params.q / params.p
    e_n = (s - 1.0) / (s ** (n + 1) - 1.0)
    e_n1 = (s - 1.0) / (s ** n - 1.0)
    if e_n1 <= e_n:
        return 0.0
    return min(max((epsilon - e_n) / (e_n1 - e_n), 0.0), 1.0)


def _run_range(args):
    (k, params, epsilon, seed, lo, hi, gamma, validate, backend, table) = args
    sum_tau = errors = ops_p = ops_u = fallbacks = sead = parts = 0
    for trial in range(lo, hi):
        theta = draw_message(seed, trial, k)
        channel = fork_stream(seed, trial, params)
        rec = run_trial(theta, k, params, epsilon, channel, table=table,
                        gamma=gamma, validate=validate, backend=backend)
        sum_tau += rec.tau
        errors += rec.error
        ops_p += rec.ops_partition
        ops_u += rec.ops_update
        fallbacks += rec.fallbacks
        sead += rec.sead_violations
        parts += rec.partitions
    return sum_tau, errors, ops_p, ops_u, fallbacks, sead, parts


def monte_carlo(k: int, params: ChannelParams, epsilon: float, trials: int,
                seed: int, *, gamma: float = 0.0, validate: bool = False,
                backend: str = "auto", workers: int = 1) -> SimStats:
    """Run `trials` independent trials and aggregate exact counters.

    The per-trial substreams make the result a pure function of
    (k, params, epsilon, trials, seed, gamma): shard boundaries and worker
    counts cannot change any sum.
    """
    if trials < 1:
        raise SpmTopError("need at least one trial")
    if workers < 1:
        raise SpmTopError("need at least one worker")
    table = binom_table(k) if k <= 64 else BinomTable(k)
    if workers == 1:
        parts = [_run_range((k, params, epsilon, seed, 0, trials, gamma,
                             validate, backend, table))]
    else:
        step = -(-trials // workers)
        jobs = [(k, params, epsilon, seed, lo, min(lo + step, trials), gamma,
                 validate, backend, table)
                for lo in range(0, trials, step)]
        with multiprocessing.Pool(len(jobs)) as pool:
            parts = pool.map(_run_range, jobs)
    totals = [sum(col) for col in zip(*parts)]
    return SimStats(k=k, params=params, epsilon=epsilon, trials=trials,
                    seed=seed, gamma=gamma, sum_tau=totals[0],
                    errors=totals[1], ops_partition=totals[2],
                    ops_update=totals[3], fallbacks=totals[4],
                    sead_violations=totals[5], partitions=totals[6])


def _sig6(x: float) -> str:
    """Format with six significant digits, repr-stable across platforms."""
    return f"{x:.6g}"


CSV_HEADER = ("K,p,epsilon,trials,seed,stopping,mean_tau,rate,fer,"
              "fer_ci_lo,fer_ci_hi,ops_partition_per_symbol,"
              "ops_update_per_symbol,fallbacks_per_trial")


def emit_report(stats_list, fmt: str = "csv") -> str:
    """Render a list of SimStats as CSV (fixed header) or JSON."""
    rows = []
    for s in stats_list:
        lo, hi = s.fer_ci
        rows.append({
            "K": s.k,
            "p": _sig6(s.params.p),
            "epsilon": _sig6(s.epsilon),
            "trials": s.trials,
            "seed": s.seed,
            "stopping": "randomized" if s.gamma > 0.0 else "standard",
            "mean_tau": _sig6(s.mean_tau),
            "rate": _sig6(s.rate),
            "fer": _sig6(s.fer),
            "fer_ci_lo": _sig6(lo),
            "fer_ci_hi": _sig6(hi),
            "ops_partition_per_symbol": _sig6(s.ops_partition_per_symbol),
            "ops_update_per_symbol": _sig6(s.ops_update_per_symbol),
            "fallbacks_per_trial": _sig6(s.fallbacks_per_trial),
        })
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt != "csv":
        raise SpmTopError(f"unknown report format {fmt!r}")
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    keys = CSV_HEADER.split(",")
    for row in rows:
        out.write(",".join(str(row[key]) for key in keys) + "\n")
    return out.getvalue()
