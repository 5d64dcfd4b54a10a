"""Backend selection: compiled trial kernel with a pure-Python fallback.

The compiled extension runs the communication and confirmation phases of a
trial in C while reproducing the pure-Python codec's floating-point operation
order exactly, so both backends emit bit-identical transcripts and records.
Requests the kernel cannot serve (transcript recording, per-step traces)
silently use the Python path.
"""

from __future__ import annotations

import numpy as np

from . import codec
from .channel import BscChannel
from .core import BinomTable, ChannelParams, SpmTopError, TypeIndex, binom_table
from .core import confirmation_steps, log_odds_threshold, rank_message, unrank_message

try:
    from . import _kernel
except ImportError:  # pragma: no cover - depends on the build environment
    _kernel = None

HAVE_KERNEL = _kernel is not None


def resolve_backend(backend: str = "auto") -> str:
    """Map 'auto' to the best available backend, validating the request."""
    if backend == "auto":
        return "compiled" if HAVE_KERNEL else "python"
    if backend == "compiled":
        if not HAVE_KERNEL:
            raise SpmTopError("compiled kernel requested but not built")
        return "compiled"
    if backend == "python":
        return "python"
    raise SpmTopError(f"unknown backend {backend!r}")


def run_trial(theta: int, k: int, params: ChannelParams, epsilon: float,
              channel: BscChannel, *, table: BinomTable | None = None,
              gamma: float = 0.0, max_uses: int | None = None,
              validate: bool = False, trace: list | None = None,
              backend: str = "auto") -> codec.TrialRecord:
    """Run one trial on the selected backend; same contract as codec.run_trial."""
    mode = resolve_backend(backend)
    if mode == "python" or trace is not None or channel.record:
        return codec.run_trial(theta, k, params, epsilon, channel, table=table,
                               gamma=gamma, max_uses=max_uses,
                               validate=validate, trace=trace)
    if not 0.0 < epsilon < 0.5:
        raise SpmTopError(f"error threshold must be in (0, 1/2), got {epsilon}")
    if not 0.0 <= gamma <= 1.0:
        raise SpmTopError(f"gamma must be in [0, 1], got {gamma}")
    if table is None:
        table = binom_table(k) if k <= 64 else BinomTable(k)
    cap = codec.default_max_uses(k, params) if max_uses is None else max_uses
    if k < 1:
        raise SpmTopError("message length must be >= 1")
    if theta >> k:
        raise SpmTopError("message wider than k bits")
    received = 0
    for t in range(k):
        y = channel.transmit((theta >> t) & 1)
        if y:
            received |= 1 << t
    rho = codec.systematic_posteriors(k, params)
    counts = [table.choose(k, h) for h in range(k + 1)]
    ti = rank_message(theta, received, k, table)
    rho_arr = np.asarray(rho, dtype=np.float64)
    tau, top_h, top_start, ops_p, ops_u, fallbacks, sead_violations, parts = (
        _kernel.run_trial_kernel(
            channel, rho_arr, counts, k, params.p, params.q, params.c2,
            log_odds_threshold(epsilon), confirmation_steps(params, epsilon),
            ti.h, ti.n, gamma, cap, validate, k))
    decoded = unrank_message(TypeIndex(int(top_h), top_start), received, k, table)
    return codec.TrialRecord(tau=int(tau), decoded=decoded,
                             error=decoded != theta,
                             ops_partition=int(ops_p), ops_update=int(ops_u),
                             fallbacks=int(fallbacks), k=k,
                             sead_violations=int(sead_violations),
                             partitions=int(parts))
