"""Closed-form upper bounds on the expected blocklength E[tau].

All four bounds share the same confirmation-phase structure: the ceiling
stopping level N enters through N * C2 / C1, and a geometric tail factor

    f = 2^(-C2) * (1 - (eps / (1 - eps)) * 2^(-C2)) / (1 - 2^(-C2))

accounts for the expected number of fallback rounds.  They differ in how the
communication phase is charged: the loosest uses C2 per restart, the
sharper ones use B = log2(2q) / q, and the distribution-aware forms charge
each message its own initial log-likelihood deficit.  Rate lower bounds are
K / bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import ChannelParams, SpmTopError, confirmation_steps


def fallback_probability(n: int, params: ChannelParams) -> float:
    """Probability that a confirmation round falls back to communication.

    Gambler's-ruin absorption at -1 before n for a walk that steps down with
    probability q: lam * (1 - lam^n) / (1 - lam^(n+1)) with lam = p/q.
    Monotone in n from p (n = 1) up to p/q.
    """
    if n < 1:
        raise SpmTopError(f"confirmation level must be >= 1, got {n}")
    lam = 2.0 ** (-params.c2)
    return lam * (1.0 - lam ** n) / (1.0 - lam ** (n + 1))


def _b_value(params: ChannelParams) -> float:
    """B = log2(2q)/q, the sharpened per-restart communication charge (< C2)."""
    return math.log2(2.0 * params.q) / params.q


def _tail_factor(epsilon: float, params: ChannelParams) -> float:
    lam = 2.0 ** (-params.c2)
    return lam * (1.0 - (epsilon / (1.0 - epsilon)) * lam) / (1.0 - lam)


def _check(k: int, epsilon: float) -> None:
    if k < 1:
        raise SpmTopError(f"message length must be >= 1, got {k}")
    if not 0.0 < epsilon < 0.5:
        raise SpmTopError(f"error threshold must be in (0, 1/2), got {epsilon}")


def _log2_m_minus_1(k: int) -> float:
    # log2(2^k - 1) without forming the power for large k
    if k == 1:
        return 0.0
    return k + math.log2(1.0 - 2.0 ** (-k))


def yang_bound(k: int, epsilon: float, params: ChannelParams) -> float:
    """Blocklength bound with a C2 + B charge on the fallback tail."""
    _check(k, epsilon)
    n = confirmation_steps(params, epsilon)
    b = _b_value(params)
    f = _tail_factor(epsilon, params)
    c, c1, c2 = params.capacity, params.c1, params.c2
    return (_log2_m_minus_1(k) / c + b / c + n * c2 / c1
            + f * ((c2 + b) / c - c2 / c1))


def thm1_bound(k: int, epsilon: float, params: ChannelParams) -> float:
    """Blocklength bound charging C2 per communication restart."""
    _check(k, epsilon)
    n = confirmation_steps(params, epsilon)
    f = _tail_factor(epsilon, params)
    c, c1, c2 = params.capacity, params.c1, params.c2
    return ((_log2_m_minus_1(k) + c2) / c + n * c2 / c1
            + f * (c2 / c - c2 / c1))


def sead_bound(k: int, epsilon: float, params: ChannelParams) -> float:
    """Sharpest uniform-prior bound: B replaces C2 in the communication terms.

    Strictly below yang_bound (the difference is f * C2 / C > 0).
    """
    _check(k, epsilon)
    n = confirmation_steps(params, epsilon)
    b = _b_value(params)
    f = _tail_factor(epsilon, params)
    c, c1, c2 = params.capacity, params.c1, params.c2
    return ((_log2_m_minus_1(k) + b) / c + n * c2 / c1
            + f * (b / c - c2 / c1))


def _profile_bound(log2_rho0, weights, epsilon: float,
                   params: ChannelParams) -> float:
    """Core of the distribution-aware bounds, in log domain.

    Takes the profile as (log2 of posterior, probability weight) pairs;
    entries with posterior >= 1/2 contribute no communication term.
    """
    if not 0.0 < epsilon < 0.5:
        raise SpmTopError(f"error threshold must be in (0, 1/2), got {epsilon}")
    total = math.fsum(weights)
    if abs(total - 1.0) > 1e-9:
        raise SpmTopError(f"initial distribution sums to {total}, expected 1")
    n = confirmation_steps(params, epsilon)
    b = _b_value(params)
    f = _tail_factor(epsilon, params)
    c, c1, c2 = params.capacity, params.c1, params.c2
    comm = 0.0
    for lr, wt in zip(log2_rho0, weights):
        if lr >= -1.0:  # log2(rho) >= -1 means rho >= 1/2
            continue
        # log2((1 - rho) / rho) = log2(1 - rho) - log2(rho), stable for tiny rho
        u = math.log2(1.0 - 2.0 ** lr) - lr
        comm += wt * (u / c + b / c)
    return comm + n * c2 / c1 + f * (b / c - c2 / c1)


def arbitrary_dist_bound(rho0, epsilon: float, params: ChannelParams) -> float:
    """Blocklength bound for an arbitrary initial distribution rho0.

    Each message is both a weight and a posterior here (the prior is the
    time-zero posterior); use systematic_binomial_bound for profiles whose
    entries underflow doubles.
    """
    for r in rho0:
        if not 0.0 < r <= 1.0:
            raise SpmTopError(f"posterior {r} outside (0, 1]")
    return _profile_bound([math.log2(r) for r in rho0], list(rho0),
                          epsilon, params)


def systematic_binomial_bound(k: int, epsilon: float, params: ChannelParams) -> float:
    """Tightest bound for the systematic scheme with uniform k-bit messages.

    The k verbatim transmissions turn the uniform prior into the binomial
    type profile; the communication charge is then the arbitrary-distribution
    bound over that profile.  Weights are computed in log domain so k up to
    10^4 does not underflow.
    """
    _check(k, epsilon)
    lq = math.log2(params.q)
    lp = math.log2(params.p)
    log2_rho = []
    weights = []
    for i in range(k + 1):
        lr = (k - i) * lq + i * lp
        lw = (math.lgamma(k + 1) - math.lgamma(i + 1) - math.lgamma(k - i + 1)
              ) / math.log(2.0) + lr
        log2_rho.append(lr)
        weights.append(2.0 ** lw)
    return k + _profile_bound(log2_rho, weights, epsilon, params)


@dataclass(frozen=True)
class BoundReport:
    """All bound values and the implied rate lower bounds at one grid point."""

    k: int
    epsilon: float
    params: ChannelParams
    n: int
    p_f: float
    b: float
    yang: float
    thm1: float
    sead: float
    systematic_binomial: float

    @property
    def rates(self) -> dict[str, float]:
        return {name: self.k / getattr(self, name)
                for name in ("yang", "thm1", "sead", "systematic_binomial")}


def bound_report(k: int, epsilon: float, params: ChannelParams) -> BoundReport:
    n = confirmation_steps(params, epsilon)
    return BoundReport(
        k=k, epsilon=epsilon, params=params, n=n,
        p_f=fallback_probability(n, params), b=_b_value(params),
        yang=yang_bound(k, epsilon, params),
        thm1=thm1_bound(k, epsilon, params),
        sead=sead_bound(k, epsilon, params),
        systematic_binomial=systematic_binomial_bound(k, epsilon, params),
    )
