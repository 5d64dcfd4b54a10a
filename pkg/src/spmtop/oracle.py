"""Brute-force reference codecs for small k.

Two layers live here:

* An explicit-membership trial runner (run_trial_naive).  It tracks every
  message individually (each class of equal-posterior messages stores its
  member list outright, no combinatorial counts, no rank/unrank) and
  evaluates floating point in the same order as the production codec, so a
  trial on an identical channel stream is reproduced bit for bit: same
  transmitted symbols, same partitions, same blocklength, same decoded
  message.  Posterior ties are exact in both implementations (posterior
  ratios are integer powers of q/p), so anything short of bit-equal
  arithmetic would resolve them inconsistently.

* Eager dense-vector primitives (naive_update, naive_partition_top,
  naive_partition_sed, u_process) over the full 2^k posterior vector with
  plain elementwise Bayes updates.  These are used for distribution-level
  property checks (balance of partitions, reversibility of confirmation
  update pairs, agreement with the lazy grouped state within tolerance) and
  are deliberately independent of the codec's evaluation order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import BscChannel
from .codec import TrialRecord, default_max_uses
from .core import (
    TINY,
    ChannelParams,
    SpmTopError,
    ceil_div,
    confirmation_steps,
    dyadic,
    log_odds_threshold,
)

MAX_DENSE_K = 12


@lru_cache(maxsize=16)
def type_order(k: int):
    """Error vectors for length k sorted by (type h, within-type rank).

    Within a type, rank order is the lexicographic order of the sets of flip
    positions, which matches the combinatorial rank used by the codec.
    Returns (errors, types, ranks) as int64 arrays of length 2^k.
    """
    errs, hs, ns = [], [], []
    for h in range(k + 1):
        for n, pos in enumerate(itertools.combinations(range(k), h)):
            e = 0
            for j in pos:
                e |= 1 << j
            errs.append(e)
            hs.append(h)
            ns.append(n)
    return (np.array(errs, dtype=np.int64), np.array(hs, dtype=np.int64),
            np.array(ns, dtype=np.int64))


# ---------------------------------------------------------------------------
# eager dense-vector primitives
# ---------------------------------------------------------------------------

def u_process(rho: np.ndarray) -> np.ndarray:
    """Log-likelihood ratio log2(rho / (1 - rho)) in bits, elementwise."""
    return np.log2(rho / (1.0 - rho))


def naive_partition_top(rho: np.ndarray) -> tuple[int, float]:
    """Threshold split of a sorted posterior vector.

    Returns (size of S0, mass of S0): the smallest prefix whose cumulative
    mass reaches 1/2, stepped back by one element when that overshoots the
    balance condition.  The result satisfies |P0 - P1| <= rho[count - 1].
    """
    if rho[0] >= 0.5:
        raise SpmTopError("partition requested while a posterior is >= 1/2")
    c = np.cumsum(rho)
    i = int(np.searchsorted(c, 0.5, side="left"))
    if i >= rho.shape[0]:
        raise SpmTopError("posterior mass below 1/2; state corrupted")
    if c[i] > 0.5 * (1.0 + rho[i]):
        i -= 1
    count = i + 1
    if count <= 0 or count >= rho.shape[0]:
        raise SpmTopError("degenerate partition; state corrupted")
    return count, float(c[i])


def naive_partition_sed(rho: np.ndarray, max_passes: int | None = None
                        ) -> tuple[np.ndarray, bool]:
    """One-sided partitioning: aim for 0 <= P0 - P1 < min over S0.

    Starts from the prefix whose mass first reaches 1/2 and moves single
    elements between the sides.  With exact ties the strict form can be
    unattainable (moving any element oscillates), so after a bounded number
    of passes the split is accepted with |P0 - P1| <= min over S0 and the
    relaxation is reported in the second return value.
    """
    m = rho.shape[0]
    if rho[0] >= 0.5:
        raise SpmTopError("partition requested while a posterior is >= 1/2")
    if max_passes is None:
        max_passes = 4 * m
    in_s0 = np.zeros(m, dtype=bool)
    c = np.cumsum(rho)
    i = int(np.searchsorted(c, 0.5, side="left"))
    in_s0[:i + 1] = True
    d = 2.0 * float(c[i]) - 1.0
    relaxed = False
    for _ in range(max_passes):
        s0_idx = np.nonzero(in_s0)[0]
        rho_min = float(rho[s0_idx].min())
        if 0.0 <= d <= rho_min:
            relaxed = d == rho_min  # equality is outside the strict rule
            break
        if d > rho_min:
            j = s0_idx[np.argmin(rho[s0_idx])]
            in_s0[j] = False
            d -= 2.0 * float(rho[j])
        else:
            s1_idx = np.nonzero(~in_s0)[0]
            j = s1_idx[np.argmin(rho[s1_idx])]
            in_s0[j] = True
            d += 2.0 * float(rho[j])
    else:
        relaxed = True
    s0_idx = np.nonzero(in_s0)[0]
    if (s0_idx.size == 0 or s0_idx.size == m
            or abs(d) > float(rho[s0_idx].min()) + 1e-12):
        # single-element moves can oscillate around a tie; fall back to the
        # sorted prefix split, which always satisfies the two-sided form
        count, p0 = naive_partition_top(rho)
        in_s0 = np.zeros(m, dtype=bool)
        in_s0[:count] = True
        return in_s0, True
    return in_s0, relaxed


def naive_update(rho: np.ndarray, in_s0: np.ndarray, y: int, params: ChannelParams,
                 p0: float | None = None) -> np.ndarray:
    """Elementwise Bayes update of the full vector for received symbol y.

    in_s0 marks the messages whose encoding was 0.  Members of the set that
    matches y scale by q/den and the rest by p/den, den being the prior
    probability of observing y.
    """
    if p0 is None:
        p0 = float(rho[in_s0].sum())
    pm = p0 if y == 0 else 1.0 - p0
    den = pm * (params.q - params.p) + params.p
    if not den > 0.0 or not math.isfinite(den):
        raise SpmTopError("non-positive update denominator; mass corrupted")
    if y == 0:
        w_in, w_out = params.q / den, params.p / den
    else:
        w_in, w_out = params.p / den, params.q / den
    out = rho.copy()
    out[in_s0] *= w_in
    out[~in_s0] *= w_out
    return out


def run_trial_dense(theta: int, k: int, params: ChannelParams, epsilon: float,
                    channel: BscChannel, *, partition_rule: str = "top",
                    max_uses: int | None = None) -> TrialRecord:
    """Plain dense-vector trial runner with eager elementwise updates.

    Supports both partitioning rules.  Statistically equivalent to the
    production codec but not bit-compatible with it (different float
    evaluation order); use run_trial_naive for exact transcript comparison.
    """
    if partition_rule not in ("top", "sed"):
        raise SpmTopError(f"unknown partition rule {partition_rule!r}")
    if k > MAX_DENSE_K:
        raise SpmTopError(f"dense oracle limited to k <= {MAX_DENSE_K}, got {k}")
    if not 0.0 < epsilon < 0.5:
        raise SpmTopError(f"error threshold must be in (0, 1/2), got {epsilon}")
    cap = default_max_uses(k, params) if max_uses is None else max_uses
    received = 0
    for t in range(k):
        y = channel.transmit((theta >> t) & 1)
        if y:
            received |= 1 << t
    errs, hs, _ = type_order(k)
    msg = (errs ^ received).copy()
    rho = params.q ** (k - hs.astype(np.float64)) * params.p ** hs.astype(np.float64)
    eps_u = log_odds_threshold(epsilon)
    n0 = confirmation_steps(params, epsilon)
    tau = k
    fallbacks = 0
    while True:
        order = np.argsort(-rho, kind="stable")
        rho = rho[order]
        msg = msg[order]
        top = float(rho[0])
        if top >= 0.5:
            if float(rho[1]) >= 0.5:
                raise SpmTopError("two posteriors >= 1/2; update bug")
            u = math.log2(top / (1.0 - top))
            n = n0
            if u + (n - 1) * params.c2 >= eps_u:
                n -= 1
            x = 0 if int(msg[0]) == theta else 1
            z = 0
            while 0 <= z < n:
                y = channel.transmit(x)
                z += 1 - 2 * y
                tau += 1
            if z == -1:
                fallbacks += 1
                in_s0 = np.zeros(rho.shape[0], dtype=bool)
                in_s0[0] = True
                rho = naive_update(rho, in_s0, 1, params, p0=top)
                continue
            break
        if tau >= cap:
            raise SpmTopError(f"trial exceeded {cap} channel uses (k={k})")
        if partition_rule == "top":
            count, p0 = naive_partition_top(rho)
            in_s0 = np.zeros(rho.shape[0], dtype=bool)
            in_s0[:count] = True
        else:
            in_s0, _ = naive_partition_sed(rho)
            p0 = float(rho[in_s0].sum())
        pos = int(np.nonzero(msg == theta)[0][0])
        x = 0 if in_s0[pos] else 1
        y = channel.transmit(x)
        tau += 1
        rho = naive_update(rho, in_s0, y, params, p0=p0)
    decoded = int(msg[0])
    return TrialRecord(tau=tau, decoded=decoded, error=decoded != theta,
                       ops_partition=0, ops_update=0, fallbacks=fallbacks, k=k)


# ---------------------------------------------------------------------------
# explicit-membership mirror runner (bit-compatible with the codec)
# ---------------------------------------------------------------------------

@dataclass
class _Cls:
    """One class of equal-posterior messages with its members listed outright.

    members holds (rank, message) pairs in increasing rank order; splitting
    slices the list instead of doing interval arithmetic, so membership,
    locator moves, and decoding are validated against the codec's
    count/start bookkeeping rather than sharing it.
    """

    members: list[tuple[int, int]]
    h: int
    rho: float
    w: float = 1.0

    @property
    def countf(self) -> float:
        return float(len(self.members))


def _materialize(classes: list[_Cls], i: int) -> None:
    g = classes[i]
    w = g.w
    if w != 1.0:
        r = g.rho * w
        if r < TINY:
            r = TINY
        g.rho = r
        if i + 1 < len(classes):
            nxt = classes[i + 1]
            wn = nxt.w * w
            if wn < TINY:
                wn = TINY
            nxt.w = wn
        g.w = 1.0


def materialized_posteriors(classes: list[_Cls]) -> np.ndarray:
    """Posterior per message in list order, with all pending weights applied."""
    for i in range(len(classes)):
        _materialize(classes, i)
    return np.array([g.rho for g in classes for _ in g.members])


def _update_merge(classes: list[_Cls], m: int, p0: float, y: int,
                  params: ChannelParams) -> list[_Cls]:
    py_mass = p0 if y == 0 else 1.0 - p0
    den = py_mass * (params.q - params.p) + params.p
    if not den > 0.0 or not math.isfinite(den):
        raise SpmTopError("non-positive update denominator; mass corrupted")
    if y == 0:
        w0 = params.q / den
        w1 = params.p / den
    else:
        w0 = params.p / den
        w1 = params.q / den
    for a in range(m + 1):
        g = classes[a]
        r = g.rho * w0
        if r < TINY:
            r = TINY
        g.rho = r
    first_s1 = classes[m + 1]
    wn = first_s1.w * w1
    if wn < TINY:
        wn = TINY
    first_s1.w = wn
    out: list[_Cls] = []
    a = 0
    b = m + 1
    nb = len(classes)
    while a <= m and b < nb:
        _materialize(classes, b)
        if classes[b].rho > classes[a].rho:
            out.append(classes[b])
            b += 1
        else:
            out.append(classes[a])
            a += 1
    while a <= m:
        out.append(classes[a])
        a += 1
    if b < nb:
        out.extend(classes[b:])
    return out


def run_trial_naive(theta: int, k: int, params: ChannelParams, epsilon: float,
                    channel: BscChannel, *, gamma: float = 0.0,
                    max_uses: int | None = None, trace: list | None = None,
                    trace_sets: bool = False) -> TrialRecord:
    """Reference trial runner, bit-compatible with the production codec.

    On an identical channel stream it reproduces the codec's transmitted
    symbols, blocklength, and decoded message exactly.  If trace is a list,
    (|S0|, P0) is appended per communication step, plus the set of
    (type, rank) pairs in S0 when trace_sets is true.
    """
    if k > MAX_DENSE_K:
        raise SpmTopError(f"dense oracle limited to k <= {MAX_DENSE_K}, got {k}")
    if not 0.0 < epsilon < 0.5:
        raise SpmTopError(f"error threshold must be in (0, 1/2), got {epsilon}")
    cap = default_max_uses(k, params) if max_uses is None else max_uses
    received = 0
    for t in range(k):
        y = channel.transmit((theta >> t) & 1)
        if y:
            received |= 1 << t
    lq = math.log(params.q)
    lp = math.log(params.p)
    classes: list[_Cls] = []
    for h in range(k + 1):
        members = []
        for n, pos in enumerate(itertools.combinations(range(k), h)):
            e = 0
            for j in pos:
                e |= 1 << j
            members.append((n, e ^ received))
        r = math.exp((k - h) * lq + h * lp)
        if r < TINY:
            r = TINY
        classes.append(_Cls(members=members, h=h, rho=r))
    if classes[0].rho <= TINY:
        raise SpmTopError(f"q^k underflows for p={params.p}, k={k}")
    eps_u = log_odds_threshold(epsilon)
    n0 = confirmation_steps(params, epsilon)
    tau = k
    fallbacks = 0
    while True:
        _materialize(classes, 0)
        g0 = classes[0]
        if g0.rho >= 0.5:
            if len(g0.members) != 1:
                raise SpmTopError("non-singleton class at posterior >= 1/2")
            shorten = gamma > 0.0 and channel.next_uniform() < gamma
            u = math.log2(g0.rho / (1.0 - g0.rho))
            n = n0
            if u + (n - 1) * params.c2 >= eps_u:
                n -= 1
            if shorten:
                n -= 1
            x = 0 if g0.members[0][1] == theta else 1
            z = 0
            while 0 <= z < n:
                y = channel.transmit(x)
                z += 1 - 2 * y
                tau += 1
            if z == -1:
                fallbacks += 1
                classes = _update_merge(classes, 0, g0.rho, 1, params)
                continue
            break
        if tau >= cap:
            raise SpmTopError(f"trial exceeded {cap} channel uses (k={k})")
        # threshold scan and split index in exact dyadic arithmetic,
        # identical decisions to the codec's partition
        m = 0
        p0 = 0.0
        s_int = 0
        s_exp = -1
        g = classes[0]
        while True:
            mi, ei = dyadic(g.rho)
            cmi = len(g.members) * mi
            e = min(s_exp, ei)
            s_new = (s_int << (s_exp - e)) + (cmi << (ei - e))
            if s_new >= 1 << (-1 - e):
                break
            s_int, s_exp = s_new, e
            p0 += g.countf * g.rho
            m += 1
            if m >= len(classes):
                raise SpmTopError("posterior mass below 1/2; state corrupted")
            _materialize(classes, m)
            g = classes[m]
        rho_m = g.rho
        e = min(s_exp, -1)
        num = (1 << (-1 - e)) - (s_int << (s_exp - e))
        if e >= ei:
            n = ceil_div(num << (e - ei), mi)
        else:
            n = ceil_div(num, mi << (ei - e))
        f = min(e, ei - 1)
        over = ((n * mi) << (ei - f)) - (num << (e - f))
        if over > mi << (ei - 1 - f):
            n -= 1
        if n == 0:
            m -= 1
        elif n < len(g.members):
            new = _Cls(members=g.members[n:], h=g.h, rho=rho_m)
            g.members = g.members[:n]
            classes.insert(m + 1, new)
        p0 = p0 + float(n) * rho_m
        if m < 0 or m + 1 >= len(classes):
            raise SpmTopError("degenerate partition; state corrupted")
        s0 = classes[:m + 1]
        if trace is not None:
            entry = [sum(len(c.members) for c in s0), p0]
            if trace_sets:
                entry.append(frozenset((c.h, n) for c in s0 for n, _ in c.members))
            trace.append(tuple(entry))
        x = 1
        for c in s0:
            if any(msg == theta for _, msg in c.members):
                x = 0
                break
        y = channel.transmit(x)
        tau += 1
        classes = _update_merge(classes, m, p0, y, params)
    decoded = classes[0].members[0][1]
    return TrialRecord(tau=tau, decoded=decoded, error=decoded != theta,
                       ops_partition=0, ops_update=0, fallbacks=fallbacks, k=k)
