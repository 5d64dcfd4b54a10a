"""Units for the grouped codec: partitions, updates, full trials."""

import math

import pytest

from spmtop.channel import BscChannel, draw_message, fork_stream
from spmtop.codec import (
    default_max_uses,
    encoder_bit,
    init_systematic,
    partition_top,
    run_trial,
    systematic_posteriors,
    update_merge,
)
from spmtop.core import SpmTopError, binom_table, channel_params

P011 = channel_params(0.11)
P030 = channel_params(0.3)


def test_systematic_posteriors_normalize_with_counts():
    for params, k in ((P011, 12), (P030, 30)):
        rho = systematic_posteriors(k, params)
        table = binom_table(k)
        total = math.fsum(table.choose(k, h) * rho[h] for h in range(k + 1))
        assert total == pytest.approx(1.0, abs=1e-12)
        assert all(rho[h] > rho[h + 1] for h in range(k))


def test_systematic_posteriors_underflow_guard():
    with pytest.raises(SpmTopError):
        systematic_posteriors(6500, P011)  # q^k below the double range


def _noiseless_state(theta, k, params):
    table = binom_table(k)
    channel = BscChannel.noiseless(params)
    gl, loc, received = init_systematic(theta, k, channel, params, table)
    return gl, loc, received


def test_init_systematic_noiseless_locator():
    gl, loc, received = _noiseless_state(0b0, 2, P030)
    assert received == 0
    assert loc.group is gl.groups[0]
    assert loc.n == 0
    assert [g.count for g in gl.groups] == [1, 2, 1]


def test_partition_worked_example_k2_p03():
    # [DERIVED] exact fractions: posterior groups (0.49, 2 x 0.21, 0.09);
    # ceil((1/2 - 0.49)/0.21) = 1 overshoots by 0.2 > 0.105, so the balance
    # correction pulls the whole threshold group to S1: S0 = {h=0}, P0 = 0.49
    gl, loc, _ = _noiseless_state(0b0, 2, P030)
    part = partition_top(gl, loc)
    assert part.m == 0
    assert part.split_n == 0
    assert part.p0 == pytest.approx(0.49, abs=1e-15)
    assert part.delta == pytest.approx(-0.02, abs=1e-15)
    assert part.sead_ok
    assert encoder_bit(gl, part, loc) == 0


def test_update_worked_example_k2_p03():
    # [DERIVED] y=0 masses: den = 0.49*0.4 + 0.3 = 0.496;
    # h0 -> 0.49*0.7/0.496, each h1 -> 0.21*0.3/0.496, h2 -> 0.09*0.3/0.496
    gl, loc, _ = _noiseless_state(0b0, 2, P030)
    part = partition_top(gl, loc)
    update_merge(gl, part, 0, P030)
    gl.materialize_all()
    rho = [g.rho for g in gl.groups]
    assert rho[0] == pytest.approx(0.6915322580645161, abs=1e-15)
    assert rho[1] == pytest.approx(0.12701612903225806, abs=1e-15)
    assert rho[2] == pytest.approx(0.05443548387096774, abs=1e-15)
    assert gl.total_mass() == pytest.approx(1.0, abs=1e-12)


def test_partition_rejects_confirmation_state():
    gl, loc, _ = _noiseless_state(0b0, 2, P030)
    part = partition_top(gl, loc)
    update_merge(gl, part, 0, P030)  # h0 now at 0.69 >= 1/2
    with pytest.raises(SpmTopError):
        partition_top(gl, loc)


def test_noiseless_trial_blocklengths():
    # [DERIVED] by hand: k=1, p=0.11: N drops 4 -> 3 by the threshold
    # adjustment, so tau = 1 systematic + 3 confirmation steps
    ch = BscChannel.noiseless(P011)
    rec = run_trial(0b1, 1, P011, 1e-3, ch)
    assert rec.tau == 4 and not rec.error and rec.fallbacks == 0
    # [DERIVED] by hand: k=2, p=0.3: 1 communication step reaches 0.69,
    # then N drops 9 -> 8: tau = 2 + 1 + 8
    ch = BscChannel.noiseless(P030)
    rec = run_trial(0b00, 2, P030, 1e-3, ch)
    assert rec.tau == 11 and not rec.error


def test_trial_invariants_random_noise():
    for params in (P011, P030):
        for trial in range(60):
            k = 3 + trial % 8
            theta = draw_message(11, trial, k)
            ch = fork_stream(11, trial, params)
            rec = run_trial(theta, k, params, 1e-3, ch, validate=True)
            assert rec.tau >= k + 1
            assert rec.tau == ch.uses
            assert rec.sead_violations == 0
            assert 0 <= rec.decoded < (1 << k)
            assert rec.partitions >= 0
            assert rec.ops_partition >= rec.partitions


def test_mass_stays_normalized_through_a_trial():
    gl, loc, _ = _noiseless_state(0b10110, 5, P011)
    ch = fork_stream(3, 0, P011)
    for _ in range(12):
        gl.materialize(0)
        if gl.groups[0].rho >= 0.5:
            break
        part = partition_top(gl, loc)
        y = ch.transmit(encoder_bit(gl, part, loc))
        update_merge(gl, part, y, P011)
        assert gl.total_mass() == pytest.approx(1.0, abs=1e-9)


def test_fallbacks_happen_and_recover():
    errors = fallbacks = 0
    for trial in range(400):
        theta = draw_message(21, trial, 6)
        ch = fork_stream(21, trial, P030)
        rec = run_trial(theta, 6, P030, 1e-2, ch)
        fallbacks += rec.fallbacks
        errors += rec.error
    assert fallbacks > 0  # p = 0.3 falls back often (p_f ~ 0.43)
    assert errors / 400 < 0.05


def test_parameter_validation():
    ch = BscChannel.noiseless(P011)
    with pytest.raises(SpmTopError):
        run_trial(0, 3, P011, 0.7, ch)
    with pytest.raises(SpmTopError):
        run_trial(0, 3, P011, 1e-3, ch, gamma=-0.1)
    with pytest.raises(SpmTopError):
        run_trial(0b1000, 3, P011, 1e-3, ch)
    with pytest.raises(SpmTopError):
        run_trial(0, 0, P011, 1e-3, ch)


def test_hard_cap_raises():
    # p = 0.3 keeps k = 3 in the communication phase past 4 uses
    ch = BscChannel.noiseless(P030)
    with pytest.raises(SpmTopError):
        run_trial(0b101, 3, P030, 1e-3, ch, max_uses=4)


def test_default_max_uses_scale():
    assert default_max_uses(10, P011) == math.ceil(1000 / P011.capacity)
