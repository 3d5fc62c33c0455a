import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from surfsig import decoder as dec
from surfsig.codes import random_uuv
from surfsig.estimator import prange_weight_law
from surfsig.f2linalg import BitMatrix, BitVector, mat_vec_mul_transposed, random_full_rank
from surfsig.surf import SurfParams


def syndrome_ok(H, e, s):
    return mat_vec_mul_transposed(H, e) == s


# ---------------------------------------------------------------- Prange


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_prange_solves_and_stays_in_r_positions(seed):
    rng = np.random.default_rng(seed)
    H = random_full_rank(10, 24, rng)
    s = BitVector.random(10, rng)
    e = dec.prange_decode(H, s, rng)
    assert syndrome_ok(H, e, s)
    assert e.weight() <= 10


def test_prange_identity_returns_syndrome():
    rng = np.random.default_rng(0)
    s = BitVector.from_bits([1, 0, 1, 1, 0])
    assert dec.prange_decode(BitMatrix.identity(5), s, rng) == s


def test_prange_weight_law_small():
    rng = np.random.default_rng(1)
    H = random_full_rank(12, 24, rng)
    N = 20000
    w = np.array([dec.prange_decode(H, BitVector.random(12, rng), rng).weight() for _ in range(N)])
    law = prange_weight_law(12)
    obs = np.bincount(w, minlength=13).astype(float)
    # pool the thin tails
    o = np.concatenate([[obs[:3].sum()], obs[3:10], [obs[10:].sum()]])
    e = N * np.concatenate([[law[:3].sum()], law[3:10], [law[10:].sum()]])
    assert chisquare(o, e).pvalue > 0.001


def test_fixed_weight_zero_and_mode():
    rng = np.random.default_rng(2)
    H = random_full_rank(10, 20, rng)
    assert dec.prange_decode_fixed(H, BitVector.zeros(10), 0, rng).weight() == 0
    ok = 0
    for _ in range(200):
        s = BitVector.random(10, rng)
        try:
            e = dec.prange_decode_fixed(H, s, 5, rng, max_restarts=100)
        except dec.RestartBudgetExceeded:
            continue
        assert e.weight() == 5 and syndrome_ok(H, e, s)
        ok += 1
    assert ok >= 198


def test_fixed_weight_budget_exhaustion():
    rng = np.random.default_rng(3)
    H = random_full_rank(10, 20, rng)
    with pytest.raises(dec.RestartBudgetExceeded):
        dec.prange_decode_fixed(H, BitVector.zeros(10), 7, rng, max_restarts=5)
    with pytest.raises(ValueError):
        dec.prange_decode_fixed(H, BitVector.zeros(10), 11, rng)


# ---------------------------------------------------------------- erasures


def test_erasure_reduce_hand_example():
    H = BitMatrix.identity(3)
    s = BitVector.from_bits([1, 0, 1])
    H2, s2, ctx = dec.erasure_reduce(H, s, BitVector.from_support(3, [0]))
    assert H2 == BitMatrix.identity(2)
    assert s2 == BitVector.from_bits([0, 1])
    e = ctx.reassemble(BitVector.from_bits([0, 1]))
    assert syndrome_ok(H, e, s)


def test_erasure_reduce_no_erasures():
    rng = np.random.default_rng(4)
    H = random_full_rank(4, 9, rng)
    s = BitVector.random(4, rng)
    H2, s2, _ = dec.erasure_reduce(H, s, BitVector.zeros(9))
    assert H2 == H and s2 == s


def test_erasure_reduce_dependent_columns():
    H = BitMatrix.from_bits(np.array([[1, 1, 0], [0, 0, 1]], dtype=np.uint8))
    with pytest.raises(dec.DependentErasureColumns):
        dec.erasure_reduce(H, BitVector.zeros(2), BitVector.from_support(3, [0, 1]))


def brute_force_solutions(H, s, erased, nu):
    n = H.cols
    Hb = H.bits()
    out = set()
    for bits in itertools.product([0, 1], repeat=n):
        e = np.array(bits, dtype=np.uint8)
        if np.array_equal((Hb @ e) & 1, s.bits()) and int(np.delete(e, erased).sum()) == nu:
            out.add(bits)
    return out


def test_erasure_fixed_against_brute_force():
    rng = np.random.default_rng(5)
    H = random_full_rank(10, 16, rng)
    s = BitVector.random(10, rng)
    erased = np.array([1, 4, 7, 12])
    x = BitVector.from_support(16, erased)
    sols = brute_force_solutions(H, s, erased, 3)
    assert sols
    found = 0
    for _ in range(30):
        try:
            e = dec.prange_decode_erasure_fixed(H, s, x, 3, rng, max_restarts=400)
        except dec.RestartBudgetExceeded:
            continue  # some syndromes have no weight-3 solution reachable by Prange
        assert tuple(int(b) for b in e.bits()) in sols
        found += 1
    assert found in (0, 30)


def test_erasure_fixed_success_rate_over_instances():
    rng = np.random.default_rng(15)
    ok = 0
    for _ in range(200):
        H = random_full_rank(12, 24, rng)
        s = BitVector.random(12, rng)
        x = BitVector.from_support(24, rng.choice(24, 4, replace=False))
        try:
            e = dec.prange_decode_erasure_fixed(H, s, x, 4, rng)
        except dec.DependentErasureColumns:
            ok += 1
            continue
        except dec.RestartBudgetExceeded:
            continue
        assert syndrome_ok(H, e, s)
        assert int(np.delete(e.bits(), x.support()).sum()) == 4
        ok += 1
    assert ok >= 198


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40)
def test_erasure_round_trip(seed):
    rng = np.random.default_rng(seed)
    n, r = 24, 12
    H = random_full_rank(r, n, rng)
    s = BitVector.random(r, rng)
    rho = int(rng.integers(0, 6))
    erased = rng.choice(n, rho, replace=False)
    try:
        H2, s2, ctx = dec.erasure_reduce(H, s, BitVector.from_support(n, erased))
    except dec.DependentErasureColumns:
        return
    assert H2.shape == (r - rho, n - rho)
    e2 = dec.prange_decode(H2, s2, rng) if H2.rows else BitVector.zeros(n - rho)
    e = ctx.reassemble(e2)
    assert syndrome_ok(H, e, s)
    assert int(np.delete(e.bits(), erased).sum()) == e2.weight()


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40)
def test_partial_reduction_tolerates_dependence(seed):
    rng = np.random.default_rng(seed)
    r, n = 6, 20
    H = BitMatrix.random(r, n, rng)
    H = BitMatrix.from_bits(np.hstack([H.bits()[:, :1], H.bits()]))  # column 0 == column 1
    s = BitVector.from_bits((H.bits() @ rng.integers(0, 2, n + 1)) & 1)
    erased = np.array([0, 1, 5])
    H2, s2, lift = dec._erasure_reduce_partial(H.bits(), s.bits(), erased, rng)
    assert H2.shape[0] >= r - 2
    e2 = dec._prange_bits(H2, s2, rng, None) if H2.shape[0] and s2.any() else np.zeros(n + 1 - 3, np.uint8)
    if H2.shape[0] and not s2.any():
        e2 = np.zeros(H2.shape[1], np.uint8)
    e = lift(e2)
    assert np.array_equal((H.bits() @ e) & 1, s.bits())


# ---------------------------------------------------------------- (U, U+V) decoders


def test_v1_target_parity():
    for half, kU, kV in [(12, 7, 5), (100, 62, 38), (50, 20, 12)]:
        t = dec.v1_target(half, kU, kV)
        assert (half - kU - t) % 2 == 0
        assert 0 <= t <= half - kV


def test_v1_weight_and_syndrome():
    rng = np.random.default_rng(6)
    code = random_uuv(200, 62, 38, rng)
    for _ in range(40):
        s1 = BitVector.random(38, rng)
        s2 = BitVector.random(62, rng)
        e = dec.uuv_decode_v1(code, s1, s2, rng)
        assert e.weight() == 38
        assert syndrome_ok(code.H_sec, e, s1.concat(s2))


def test_v1_toy_length_may_exhaust():
    # at n = 24 the V stage aims for weight 3 and some syndromes are out of reach
    rng = np.random.default_rng(6)
    code = random_uuv(24, 7, 5, rng)
    for _ in range(30):
        s1, s2 = BitVector.random(5, rng), BitVector.random(7, rng)
        try:
            e = dec.uuv_decode_v1(code, s1, s2, rng)
        except dec.RestartBudgetExceeded:
            continue
        assert e.weight() == 5 and syndrome_ok(code.H_sec, e, s1.concat(s2))


def test_v1_precondition():
    rng = np.random.default_rng(7)
    code = random_uuv(24, 10, 2, rng)
    with pytest.raises(ValueError):
        dec.uuv_decode_v1(code, BitVector.zeros(2), BitVector.zeros(10), rng)


DESK = SurfParams(n=200, k_U=62, k_V=38, w=38, lam=16)


def test_rejection_table_invariants():
    t = dec.build_rejection_table(DESK)
    assert np.all((t.x >= 0) & (t.x <= 1))
    assert not t.x[1::2].any()  # w even
    assert t.x.max() == pytest.approx(1.0, abs=1e-12)
    assert t.acceptance_probability() == pytest.approx(1 / t.M_rs, abs=1e-9)


def test_rejection_table_at_n2000():
    p = SurfParams(n=2000, k_U=618, k_V=382, w=382, lam=80)
    assert abs(dec.build_rejection_table(p).M_rs - 2.54) < 0.05


def test_v2_weight_decomposition():
    rng = np.random.default_rng(8)
    code = random_uuv(200, 62, 38, rng)
    table = dec.build_rejection_table(DESK)
    for _ in range(100):
        s1 = BitVector.random(38, rng)
        s2 = BitVector.random(62, rng)
        e = dec.uuv_decode_v2(code, s1, s2, table, rng)
        assert e.weight() == 38
        assert syndrome_ok(code.H_sec, e, s1.concat(s2))
        b = e.bits()
        eV = b[:100] ^ b[100:]
        assert dec.w1(e) == eV.sum()
        assert dec.w2(e) == (38 - eV.sum()) // 2


def test_v2_budget():
    rng = np.random.default_rng(9)
    code = random_uuv(200, 62, 38, rng)
    table = dec.build_rejection_table(DESK)
    with pytest.raises(dec.IterationBudgetExceeded):
        for _ in range(200):
            dec.uuv_decode_v2(code, BitVector.random(38, rng), BitVector.random(62, rng), table, rng, budget=1)


def test_v2_policy_validation():
    rng = np.random.default_rng(10)
    code = random_uuv(200, 62, 38, rng)
    table = dec.build_rejection_table(DESK)
    with pytest.raises(ValueError):
        dec.uuv_decode_v2_bits(code, BitVector.zeros(38), BitVector.zeros(62), table, rng, on_u_failure="nope")
    with pytest.raises(ValueError):
        dec.uuv_decode_v2_bits(code, BitVector.zeros(38), BitVector.zeros(62), table, rng, dependent_erasures="x")


def test_stats_are_filled():
    rng = np.random.default_rng(11)
    code = random_uuv(200, 62, 38, rng)
    table = dec.build_rejection_table(DESK)
    st_ = dec.DecodeStats()
    for _ in range(20):
        dec.uuv_decode_v2(code, BitVector.random(38, rng), BitVector.random(62, rng), table, rng, stats=st_)
    assert st_.v_decodes >= 20
    assert st_.eliminations >= st_.v_decodes


def test_w1_chi_square_on_exact_law():
    from surfsig.estimator import uniform_w1_law

    law = uniform_w1_law(200, 38)
    counts = np.round(law * 10000).astype(int)
    vals = np.repeat(np.arange(law.size), counts)
    rep = dec.w1_chi_square(vals, 200, 38)
    assert rep.p_value > 0.99


def test_pairwise_leak_statistic_on_uniform_sphere():
    rng = np.random.default_rng(12)
    E = np.zeros((4000, 60), dtype=np.uint8)
    for row in E:
        row[rng.choice(60, 9, replace=False)] = 1
    rep = dec.pairwise_leak_test(E)
    expected = 9 * 8 / (60 * 59)
    assert rep.unmatched_rate == pytest.approx(expected, rel=0.05)
    assert rep.p_value > 0.001
    assert math.isfinite(rep.z)


def test_v2_absorb_policy_still_solves():
    rng = np.random.default_rng(13)
    code = random_uuv(200, 62, 38, rng)
    table = dec.build_rejection_table(DESK)
    for _ in range(30):
        s1, s2 = BitVector.random(38, rng), BitVector.random(62, rng)
        e = dec.uuv_decode_v2_bits(code, s1, s2, table, rng, dependent_erasures="absorb")
        assert int(e.sum()) == 38
        assert syndrome_ok(code.H_sec, BitVector.from_bits(e), s1.concat(s2))


def test_redrawing_the_weight_on_u_failure_skews_w1():
    # throwing away an accepted weight after a U-stage failure biases w1 towards weights that rarely fail
    rng = np.random.default_rng(14)
    code = random_uuv(200, 62, 38, rng)
    table = dec.build_rejection_table(DESK)
    vals = [
        dec.w1(dec.uuv_decode_v2_bits(code, BitVector.random(38, rng), BitVector.random(62, rng), table, rng,
                                      on_u_failure="redraw"))
        for _ in range(3000)
    ]
    assert dec.w1_chi_square(vals, 200, 38).p_value < 1e-3
