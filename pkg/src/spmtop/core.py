"""Channel constants, binomial tables, and the type/index map for messages.

Messages and received words are packed bit-vectors: a Python integer whose
bit 0 is the first transmitted bit, together with an explicit length ``k``.
Every message is classified by its type ``h`` (Hamming distance from the
received systematic word) and an exact index ``n`` within the ``C(k, h)``
words of that type; decoding is the inverse map, so both directions use
exact big-integer binomial coefficients throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

# Floor for posteriors/weights that underflow the double range.  Groups at the
# sentinel are unreachable by the partition threshold scan before
# renormalization lifts them, so the value never influences a decision.
TINY = 1e-300

LOG2E = 1.0 / math.log(2.0)


class SpmTopError(Exception):
    """Raised on invalid parameters or corrupted codec state."""


@dataclass(frozen=True)
class ChannelParams:
    """Crossover probability and the derived constants used everywhere.

    capacity = 1 - H(p) bits per channel use; c2 = log2(q/p) is the largest
    one-step log-likelihood swing; c1 = (q - p) * c2 is the expected
    confirmation-phase drift.
    """

    p: float
    q: float
    capacity: float
    c1: float
    c2: float


def binary_entropy(p: float) -> float:
    """Binary entropy H(p) in bits."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def channel_params(p: float) -> ChannelParams:
    """Build ChannelParams for crossover probability ``p``.

    Only 0 < p < 1/2 is supported: at the endpoints the scheme's constants
    degenerate (c2 -> 0 or the channel is noiseless).
    """
    if not 0.0 < p < 0.5:
        raise SpmTopError(f"crossover probability must be in (0, 1/2), got {p}")
    q = 1.0 - p
    c2 = math.log2(q / p)
    c1 = (q - p) * c2
    return ChannelParams(p=p, q=q, capacity=1.0 - binary_entropy(p), c1=c1, c2=c2)


def log_odds_threshold(epsilon: float) -> float:
    """log2((1 - eps) / eps), the stopping threshold on the log-likelihood ratio."""
    if not 0.0 < epsilon < 0.5:
        raise SpmTopError(f"error threshold must be in (0, 1/2), got {epsilon}")
    return math.log2((1.0 - epsilon) / epsilon)


def confirmation_steps(params: ChannelParams, epsilon: float) -> int:
    """Smallest N with N * c2 >= log2((1 - eps) / eps).

    This is the number of net boosting steps of the confirmation random walk
    under the ceiling stopping rule.
    """
    n = math.ceil(log_odds_threshold(epsilon) / params.c2)
    return max(int(n), 1)


class BinomTable:
    """Triangular array of exact binomial coefficients C(n, r), 0 <= r <= n <= max_k.

    Entries are Python integers, so values such as C(1000, 500) stay exact;
    the rank/unrank maps only ever compare and add them, never round.
    Immutable after construction and safe to share across workers.
    """

    __slots__ = ("max_k", "_rows")

    def __init__(self, max_k: int):
        if max_k < 0:
            raise SpmTopError("max_k must be non-negative")
        self.max_k = max_k
        rows = [[1]]
        for n in range(1, max_k + 1):
            prev = rows[-1]
            row = [1] * (n + 1)
            for r in range(1, n):
                row[r] = prev[r - 1] + prev[r]
            rows.append(row)
        self._rows = rows

    def choose(self, n: int, r: int) -> int:
        if r < 0 or r > n:
            return 0
        return self._rows[n][r]


@lru_cache(maxsize=8)
def binom_table(max_k: int) -> BinomTable:
    """Shared BinomTable instances (construction is O(max_k^2))."""
    return BinomTable(max_k)


_MANT = float(1 << 53)


def dyadic(x: float) -> tuple[int, int]:
    """Exact (mantissa, exponent) of a positive double: x == m * 2**e.

    Doubles are dyadic rationals, so integer arithmetic on these pairs
    evaluates sums and comparisons of posterior masses without rounding.
    """
    m, e = math.frexp(x)
    return int(m * _MANT), e - 53


def ceil_div(a: int, b: int) -> int:
    """Ceiling of a / b for exact integers, b > 0."""
    return -(-a // b)


@dataclass(frozen=True)
class TypeIndex:
    """Type h (Hamming distance from the received word) and rank n within the type."""

    h: int
    n: int


def hamming_weight(x: int) -> int:
    return bin(x).count("1")


def pack_bits(bits) -> int:
    """Pack an iterable of 0/1 values, first bit into bit 0."""
    value = 0
    for j, b in enumerate(bits):
        if b:
            value |= 1 << j
    return value


def unpack_bits(value: int, k: int) -> list[int]:
    return [(value >> j) & 1 for j in range(k)]


def rank_message(message: int, received: int, k: int, table: BinomTable) -> TypeIndex:
    """Map a message to its (type, index) pair relative to the received word.

    The index orders the weight-h error vectors so that words whose error
    positions come earlier rank lower: skipping a zero bit at position j with
    c flips still pending costs C(k - j - 1, c - 1).
    """
    if k > table.max_k:
        raise SpmTopError(f"k={k} exceeds table max_k={table.max_k}")
    if message >> k or received >> k:
        raise SpmTopError("bit-vector wider than its declared length")
    err = message ^ received
    h = hamming_weight(err)
    n = 0
    c = h
    for j in range(k):
        if c == 0:
            break
        if (err >> j) & 1:
            c -= 1
        else:
            n += table.choose(k - j - 1, c - 1)
    return TypeIndex(h=h, n=n)


def unrank_message(ti: TypeIndex, received: int, k: int, table: BinomTable) -> int:
    """Inverse of rank_message: recover the unique message with the given (h, n)."""
    if not 0 <= ti.h <= k:
        raise SpmTopError(f"type {ti.h} out of range for k={k}")
    if not 0 <= ti.n < table.choose(k, ti.h):
        raise SpmTopError(f"index {ti.n} out of range for type {ti.h}, k={k}")
    est = received
    n = ti.n
    h = ti.h
    for j in range(k):
        if h == 0:
            break
        c = table.choose(k - 1 - j, h - 1)
        if n < c:
            est ^= 1 << j
            h -= 1
        else:
            n -= c
    return est
