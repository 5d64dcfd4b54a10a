"""Systematic posterior-matching codec over a grouped message list.

Messages at the same Hamming distance from the received systematic word share
one posterior, so the receiver state is a short list of groups sorted by
decreasing posterior instead of a 2^k vector.  Each transmission partitions
the list at the threshold where the ordered posterior mass crosses 1/2
(splitting at most one group), then rescales and re-merges the two sides.
Groups past the merge frontier are not touched: their pending multiplicative
weight rides on the first untouched group and is pushed along the list only
when a later scan reaches it.

The three phases:

* systematic: the k message bits are sent verbatim and the k+1 type groups
  are created from the received word;
* communication: threshold partitioning + Bayes update while every posterior
  is below 1/2;
* confirmation: once a singleton group reaches posterior >= 1/2, a +/-1
  random walk on the net count of matching symbols, absorbing at N (decode)
  or -1 (fall back to the communication phase after one adverse update).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import BscChannel
from .core import (
    TINY,
    BinomTable,
    ChannelParams,
    SpmTopError,
    TypeIndex,
    binom_table,
    ceil_div,
    confirmation_steps,
    dyadic,
    log_odds_threshold,
    rank_message,
    unrank_message,
)


class Group:
    """One run of messages with equal type and equal posterior.

    count/start are exact integers (they reach C(k, h) magnitudes for large
    k, far beyond 2^53); countf caches float(count) for mass arithmetic.
    w is the pending lazy weight that still applies to this group and every
    group after it.
    """

    __slots__ = ("count", "countf", "start", "h", "rho", "w")

    def __init__(self, count: int, start: int, h: int, rho: float, w: float = 1.0):
        self.count = count
        self.countf = float(count)
        self.start = start
        self.h = h
        self.rho = rho
        self.w = w


class GroupList:
    """Ordered group list; materialized posteriors are non-increasing."""

    __slots__ = ("groups", "k", "params")

    def __init__(self, groups: list[Group], k: int, params: ChannelParams):
        self.groups = groups
        self.k = k
        self.params = params

    def materialize(self, i: int) -> None:
        """Apply group i's pending weight, pushing it to the next group."""
        g = self.groups[i]
        w = g.w
        if w != 1.0:
            r = g.rho * w
            if r < TINY:
                r = TINY
            g.rho = r
            if i + 1 < len(self.groups):
                nxt = self.groups[i + 1]
                wn = nxt.w * w
                if wn < TINY:
                    wn = TINY
                nxt.w = wn
            g.w = 1.0

    def materialize_all(self) -> None:
        for i in range(len(self.groups)):
            self.materialize(i)

    def total_mass(self) -> float:
        self.materialize_all()
        return math.fsum(g.countf * g.rho for g in self.groups)


@dataclass
class Partition:
    """One threshold split: S0 = groups[0..m], S1 = the rest."""

    m: int
    split_n: int
    p0: float
    p1: float
    delta: float
    rho_min: float
    visited: int
    sead_ok: bool = True


@dataclass
class MessageLocator:
    """Transmitter-side position of the true message: its group and exact type index."""

    group: Group
    n: int


@dataclass
class TrialRecord:
    """Outcome of one full encode/decode run."""

    tau: int
    decoded: int
    error: bool
    ops_partition: int
    ops_update: int
    fallbacks: int
    k: int
    sead_violations: int = 0
    partitions: int = 0


def systematic_posteriors(k: int, params: ChannelParams) -> list[float]:
    """Per-message posterior q^(k-h) p^h for each type h, computed in log domain.

    Underflowed entries are floored to the TINY sentinel; the all-correct type
    must stay representable, which bounds the supported (p, k) region.
    """
    lq = math.log(params.q)
    lp = math.log(params.p)
    out = []
    for h in range(k + 1):
        r = math.exp((k - h) * lq + h * lp)
        if r < TINY:
            r = TINY
        out.append(r)
    if out[0] <= TINY:
        raise SpmTopError(f"q^k underflows for p={params.p}, k={k}")
    return out


def init_systematic(theta: int, k: int, channel: BscChannel, params: ChannelParams,
                    table: BinomTable) -> tuple[GroupList, MessageLocator, int]:
    """Send the k message bits verbatim and build the initial k+1 type groups."""
    if k < 1:
        raise SpmTopError("message length must be >= 1")
    if theta >> k:
        raise SpmTopError("message wider than k bits")
    received = 0
    for t in range(k):
        y = channel.transmit((theta >> t) & 1)
        if y:
            received |= 1 << t
    rho = systematic_posteriors(k, params)
    groups = [Group(count=table.choose(k, h), start=0, h=h, rho=rho[h])
              for h in range(k + 1)]
    gl = GroupList(groups, k, params)
    ti = rank_message(theta, received, k, table)
    loc = MessageLocator(group=groups[ti.h], n=ti.n)
    return gl, loc, received


def partition_top(gl: GroupList, loc: MessageLocator | None = None) -> Partition:
    """Split the list where the cumulative ordered mass crosses 1/2.

    The threshold scan and the within-group split index are decided in exact
    integer arithmetic (posteriors are dyadic rationals and counts are exact
    integers), because near the crossing the per-message posterior can sit
    far below one ulp of 1/2 and a float-chosen index cannot keep the two
    sides within one posterior of each other.  The float prefix mass p0 is
    accumulated alongside for the Bayes update.

    Mutates the list when the threshold falls inside a group (the tail part
    becomes a new group on the S1 side) and updates the locator if the true
    message sits in the split group.  The returned partition satisfies
    |p0 - p1| <= rho_min exactly; sead_ok records the integer-arithmetic
    verification of that inequality.
    """
    groups = gl.groups
    gl.materialize(0)
    if groups[0].rho >= 0.5:
        raise SpmTopError("partition requested while a posterior is >= 1/2")
    m = 0
    p0 = 0.0
    s_int = 0  # exact prefix mass, s_int * 2**s_exp
    s_exp = -1
    visited = 1
    g = groups[0]
    while True:
        mi, ei = dyadic(g.rho)
        cmi = g.count * mi
        e = min(s_exp, ei)
        s_new = (s_int << (s_exp - e)) + (cmi << (ei - e))
        if s_new >= 1 << (-1 - e):  # prefix + whole group reaches 1/2
            break
        s_int, s_exp = s_new, e
        p0 += g.countf * g.rho
        m += 1
        if m >= len(groups):
            raise SpmTopError("posterior mass below 1/2; state corrupted")
        gl.materialize(m)
        g = groups[m]
        visited += 1
    rho_m = g.rho
    # n = ceil((1/2 - prefix) / rho_m) exactly
    e = min(s_exp, -1)
    num = (1 << (-1 - e)) - (s_int << (s_exp - e))
    if e >= ei:
        n = ceil_div(num << (e - ei), mi)
    else:
        n = ceil_div(num, mi << (ei - e))
    # overshoot = prefix + n * rho_m - 1/2 as an exact integer at scale 2**f
    f = min(e, ei - 1)
    over = ((n * mi) << (ei - f)) - (num << (e - f))
    if over > mi << (ei - 1 - f):  # balance correction: overshoot > rho_m / 2
        n -= 1
        over -= mi << (ei - f)
    if n == 0:
        m -= 1  # whole threshold group belongs to S1
    elif n < g.count:
        new = Group(count=g.count - n, start=g.start + n, h=g.h, rho=rho_m)
        g.count = n
        g.countf = float(n)
        groups.insert(m + 1, new)
        if loc is not None and loc.group is g and loc.n >= new.start:
            loc.group = new
    p0 = p0 + float(n) * rho_m
    p1 = 1.0 - p0
    if m < 0 or m + 1 >= len(groups):
        raise SpmTopError("degenerate partition; state corrupted")
    rho_min = groups[m].rho
    mi2, ei2 = dyadic(rho_min)
    f2 = min(f, ei2)
    sead_ok = abs(over) << (f - f2 + 1) <= mi2 << (ei2 - f2)
    return Partition(m=m, split_n=n, p0=p0, p1=p1, delta=2.0 * p0 - 1.0,
                     rho_min=rho_min, visited=visited, sead_ok=sead_ok)


def encoder_bit(gl: GroupList, part: Partition, loc: MessageLocator) -> int:
    """0 if the true message's group landed in S0, else 1."""
    g = loc.group
    for i in range(part.m + 1):
        if gl.groups[i] is g:
            return 0
    return 1


def update_merge(gl: GroupList, part: Partition, y: int, params: ChannelParams) -> int:
    """Bayes-update both sides for received symbol y and re-merge them sorted.

    S0 groups are rescaled eagerly (the partition already visited them); the
    S1 factor is folded into the first S1 group's pending weight, and only S1
    groups that overtake an S0 group are materialized.  Returns the number of
    links visited.
    """
    groups = gl.groups
    m = part.m
    py_mass = part.p0 if y == 0 else part.p1
    den = py_mass * (params.q - params.p) + params.p
    if not den > 0.0 or not math.isfinite(den):
        raise SpmTopError("non-positive update denominator; mass corrupted")
    if y == 0:
        w0 = params.q / den
        w1 = params.p / den
    else:
        w0 = params.p / den
        w1 = params.q / den
    ops = 0
    for a in range(m + 1):
        g = groups[a]
        r = g.rho * w0
        if r < TINY:
            r = TINY
        g.rho = r
        ops += 1
    first_s1 = groups[m + 1]
    wn = first_s1.w * w1
    if wn < TINY:
        wn = TINY
    first_s1.w = wn

    out: list[Group] = []
    a = 0
    b = m + 1
    nb = len(groups)
    while a <= m and b < nb:
        gl.materialize(b)
        ops += 1
        if groups[b].rho > groups[a].rho:
            out.append(groups[b])
            b += 1
        else:
            out.append(groups[a])
            a += 1
    while a <= m:
        out.append(groups[a])
        a += 1
    if b < nb:
        out.extend(groups[b:])
    gl.groups = out
    return ops


def confirmation_run(gl: GroupList, loc: MessageLocator, channel: BscChannel,
                     params: ChannelParams, epsilon: float,
                     shorten: bool = False) -> tuple[bool, int, int]:
    """Run one confirmation round on the top singleton group.

    Returns (terminated, channel_uses, update_ops).  On termination the top
    group identifies the decoded message; on fallback the group list has
    already absorbed the single net adverse update (intermediate +/- pairs
    cancel exactly, so no other state needs restoring).
    """
    gl.materialize(0)
    g0 = gl.groups[0]
    if g0.rho < 0.5:
        raise SpmTopError("confirmation requested below the 1/2 threshold")
    if g0.count != 1:
        raise SpmTopError("non-singleton group at posterior >= 1/2; update bug")
    eps_u = log_odds_threshold(epsilon)
    u = math.log2(g0.rho / (1.0 - g0.rho))
    n = confirmation_steps(params, epsilon)
    if u + (n - 1) * params.c2 >= eps_u:
        n -= 1
    if shorten:
        n -= 1
    z = 0
    steps = 0
    x = 0 if loc.group is g0 else 1
    while 0 <= z < n:
        y = channel.transmit(x)
        z += 1 - 2 * y
        steps += 1
    if z == -1:
        p0 = g0.rho
        part = Partition(m=0, split_n=1, p0=p0, p1=1.0 - p0,
                         delta=2.0 * p0 - 1.0, rho_min=p0, visited=1)
        ops = update_merge(gl, part, 1, params)
        return False, steps, ops
    return True, steps, 0


def default_max_uses(k: int, params: ChannelParams) -> int:
    """Hard cap on channel uses: 100 * k / C (a would-be hang becomes a diagnostic)."""
    return int(math.ceil(100.0 * k / params.capacity))


def run_trial(theta: int, k: int, params: ChannelParams, epsilon: float,
              channel: BscChannel, *, table: BinomTable | None = None,
              gamma: float = 0.0, max_uses: int | None = None,
              validate: bool = False, trace: list | None = None) -> TrialRecord:
    """Full encode/decode run: systematic -> communication <-> confirmation.

    gamma > 0 selects the shortened confirmation threshold (one fewer net
    step) independently at each confirmation entry, consuming one uniform
    from the channel stream per entry.  validate=True checks the partition
    constraint |p0 - p1| <= rho_min at every communication step.  If trace
    is a list, (|S0|, P0, S0 group ranges) is appended per communication
    step for cross-checks against the dense reference.
    """
    if not 0.0 < epsilon < 0.5:
        raise SpmTopError(f"error threshold must be in (0, 1/2), got {epsilon}")
    if not 0.0 <= gamma <= 1.0:
        raise SpmTopError(f"gamma must be in [0, 1], got {gamma}")
    if table is None:
        table = binom_table(k) if k <= 64 else BinomTable(k)
    cap = default_max_uses(k, params) if max_uses is None else max_uses
    gl, loc, received = init_systematic(theta, k, channel, params, table)
    tau = k
    ops_partition = 0
    ops_update = 0
    fallbacks = 0
    sead_violations = 0
    partitions = 0
    while True:
        gl.materialize(0)
        if gl.groups[0].rho >= 0.5:
            shorten = gamma > 0.0 and channel.next_uniform() < gamma
            terminated, steps, ops = confirmation_run(
                gl, loc, channel, params, epsilon, shorten=shorten)
            tau += steps
            ops_update += ops
            if terminated:
                break
            fallbacks += 1
            continue
        if tau >= cap:
            raise SpmTopError(
                f"trial exceeded {cap} channel uses (k={k}, p={params.p}); "
                "state is likely corrupted")
        part = partition_top(gl, loc)
        partitions += 1
        ops_partition += part.visited
        if validate and not part.sead_ok:
            sead_violations += 1
        if trace is not None:
            s0 = gl.groups[:part.m + 1]
            trace.append((sum(g.count for g in s0), part.p0,
                          tuple((g.h, g.start, g.count) for g in s0)))
        x = encoder_bit(gl, part, loc)
        y = channel.transmit(x)
        tau += 1
        ops_update += update_merge(gl, part, y, params)
    g0 = gl.groups[0]
    decoded = unrank_message(TypeIndex(g0.h, g0.start), received, k, table)
    return TrialRecord(tau=tau, decoded=decoded, error=decoded != theta,
                       ops_partition=ops_partition, ops_update=ops_update,
                       fallbacks=fallbacks, k=k, sead_violations=sead_violations,
                       partitions=partitions)
