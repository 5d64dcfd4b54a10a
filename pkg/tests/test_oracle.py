"""Units for the reference oracles and cross-checks against the codec."""

import numpy as np
import pytest

from spmtop import codec
from spmtop.channel import draw_message, fork_stream
from spmtop.core import SpmTopError, channel_params
from spmtop.oracle import (
    naive_partition_sed,
    naive_partition_top,
    naive_update,
    run_trial_dense,
    run_trial_naive,
    type_order,
    u_process,
)

P011 = channel_params(0.11)
P030 = channel_params(0.3)


def _expand_trace(codec_trace):
    """Codec trace stores S0 as (h, start, count) ranges; expand to (h, n) sets."""
    out = []
    for size, p0, ranges in codec_trace:
        members = frozenset((h, start + j) for h, start, count in ranges
                            for j in range(count))
        out.append((size, p0, members))
    return out


@pytest.mark.parametrize("params", [P011, P030], ids=["p011", "p030"])
def test_naive_mirror_is_bit_compatible(params):
    for k in range(2, 9):
        for trial in range(40):
            theta = draw_message(17, trial, k)
            ch_c = fork_stream(17, trial, params, record=True)
            ch_o = fork_stream(17, trial, params, record=True)
            tr_c, tr_o = [], []
            rec_c = codec.run_trial(theta, k, params, 1e-3, ch_c, trace=tr_c)
            rec_o = run_trial_naive(theta, k, params, 1e-3, ch_o,
                                    trace=tr_o, trace_sets=True)
            assert ch_c.transcript == ch_o.transcript
            assert (rec_c.tau, rec_c.decoded) == (rec_o.tau, rec_o.decoded)
            assert rec_c.fallbacks == rec_o.fallbacks
            exp = _expand_trace(tr_c)
            assert [(s, p) for s, p, _ in exp] == [(s, p) for s, p, _ in tr_o]
            assert [m for _, _, m in exp] == [m for _, _, m in tr_o]


def test_naive_mirror_bit_compatible_with_gamma():
    for trial in range(60):
        theta = draw_message(31, trial, 6)
        ch_c = fork_stream(31, trial, P011, record=True)
        ch_o = fork_stream(31, trial, P011, record=True)
        rec_c = codec.run_trial(theta, 6, P011, 1e-3, ch_c, gamma=0.55)
        rec_o = run_trial_naive(theta, 6, P011, 1e-3, ch_o, gamma=0.55)
        assert ch_c.transcript == ch_o.transcript
        assert (rec_c.tau, rec_c.decoded) == (rec_o.tau, rec_o.decoded)


def test_dense_runner_statistics_track_codec():
    taus_c, taus_d = [], []
    errs = 0
    for trial in range(250):
        theta = draw_message(41, trial, 8)
        rec_c = codec.run_trial(theta, 8, P011, 1e-3,
                                fork_stream(41, trial, P011))
        rec_d = run_trial_dense(theta, 8, P011, 1e-3,
                                fork_stream(41, trial, P011))
        taus_c.append(rec_c.tau)
        taus_d.append(rec_d.tau)
        errs += rec_d.error
    # same noise stream and same rule family: distributions must agree closely
    assert abs(np.mean(taus_c) - np.mean(taus_d)) < 1.0
    assert errs / 250 < 0.05


def test_dense_sed_rule_also_decodes():
    errs = 0
    for trial in range(150):
        theta = draw_message(43, trial, 7)
        rec = run_trial_dense(theta, 7, P011, 1e-3,
                              fork_stream(43, trial, P011),
                              partition_rule="sed")
        errs += rec.error
    assert errs / 150 < 0.05


def _random_sorted_posteriors(rng, m):
    rho = rng.dirichlet(np.full(m, 0.4))
    rho.sort()
    rho = rho[::-1]
    if rho[0] >= 0.5:  # keep the vector in the communication regime
        rho = 0.5 * rho / rho[0] * 0.98 + 0.01 / m
        rho = rho / rho.sum()
        rho.sort()
        rho = rho[::-1]
    return rho


def test_naive_partition_top_balance_property():
    rng = np.random.default_rng(7)
    for _ in range(300):
        rho = _random_sorted_posteriors(rng, int(rng.integers(3, 60)))
        if rho[0] >= 0.5:
            continue
        count, p0 = naive_partition_top(rho)
        delta = 2.0 * p0 - 1.0
        assert abs(delta) <= rho[count - 1] + 1e-12


def test_naive_partition_sed_one_sided_property():
    rng = np.random.default_rng(8)
    for _ in range(200):
        rho = _random_sorted_posteriors(rng, int(rng.integers(3, 40)))
        if rho[0] >= 0.5:
            continue
        in_s0, relaxed = naive_partition_sed(rho)
        d = 2.0 * float(rho[in_s0].sum()) - 1.0
        rho_min = float(rho[in_s0].min())
        if not relaxed:
            assert 0.0 <= d < rho_min
        else:
            assert abs(d) <= rho_min + 1e-12


def test_naive_update_conserves_mass():
    rng = np.random.default_rng(9)
    for _ in range(100):
        rho = rng.dirichlet(np.ones(16))
        in_s0 = rng.random(16) < 0.5
        if not in_s0.any() or in_s0.all():
            continue
        for y in (0, 1):
            out = naive_update(rho, in_s0, y, P011)
            assert float(out.sum()) == pytest.approx(1.0, abs=1e-12)


def test_confirmation_update_pair_resets_state():
    # boosting then adverse update on a singleton S0 is an exact involution
    # up to float round-off (unit-scale version of the acceptance check)
    rng = np.random.default_rng(10)
    for _ in range(200):
        m = int(rng.integers(4, 64))
        tail = rng.dirichlet(np.ones(m - 1))
        top = float(rng.uniform(0.5, 0.995))
        rho = np.concatenate([[top], (1.0 - top) * tail])
        in_s0 = np.zeros(m, dtype=bool)
        in_s0[0] = True
        up = naive_update(rho, in_s0, 0, P011, p0=float(rho[0]))
        back = naive_update(up, in_s0, 1, P011, p0=float(up[0]))
        assert np.max(np.abs(back - rho)) <= 1e-12


def test_u_process_monotone():
    rho = np.array([0.01, 0.2, 0.5, 0.9])
    u = u_process(rho)
    assert np.all(np.diff(u) > 0)
    assert u[2] == 0.0


def test_type_order_is_grouped_and_complete():
    errs, hs, ns = type_order(6)
    assert errs.shape == (64,)
    assert sorted(errs.tolist()) == list(range(64))
    assert np.all(np.diff(hs) >= 0)


def test_oracle_size_guard():
    ch = fork_stream(1, 0, P011)
    with pytest.raises(SpmTopError):
        run_trial_naive(0, 13, P011, 1e-3, ch)
