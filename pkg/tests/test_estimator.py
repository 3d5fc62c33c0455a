import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from surfsig import estimator as est
from surfsig.estimator import LogReal
from surfsig.surf import SurfParams, select_params


@given(st.integers(0, 64).flatmap(lambda n: st.tuples(st.just(n), st.integers(-2, n + 2))))
def test_log2_binom_matches_exact(nk):
    n, k = nk
    got = est.log2_binom(n, k)
    want = est.log2_binom_exact(n, k)
    if want == float("-inf"):
        assert got == want
    else:
        assert got == pytest.approx(want, abs=1e-9)


def test_log2_binom_vectorizes():
    out = est.log2_binom(10, np.arange(-1, 12))
    assert out.shape == (13,)
    assert np.isneginf(out[0]) and np.isneginf(out[-1])
    assert out[6] == pytest.approx(math.log2(252))


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_logreal_arithmetic(a, b):
    x, y = LogReal(a), LogReal(b)
    assert (x * y).log2_value == pytest.approx(a + b)
    assert (x + y).log2_value == pytest.approx(math.log2(2**a + 2**b), rel=1e-9, abs=1e-9)
    hi, lo = max(x, y), min(x, y)
    if hi.log2_value - lo.log2_value > 1e-6:
        assert float(hi - lo) == pytest.approx(2**hi.log2_value - 2**lo.log2_value, rel=1e-6)


def test_logreal_edges():
    assert float(LogReal.from_float(0.0)) == 0.0
    with pytest.raises(ValueError):
        LogReal.from_float(-1.0)
    with pytest.raises(OverflowError):
        float(LogReal(5000.0))
    assert (LogReal(3.0) - LogReal(3.0)).log2_value == float("-inf")


def test_entropy_and_inverse():
    assert est.entropy(0.5) == pytest.approx(1.0)
    assert est.entropy(0.0) == est.entropy(1.0) == 0.0
    for y in (0.1, 0.5, 0.9):
        assert est.entropy(est.entropy_inverse(y)) == pytest.approx(y, abs=1e-12)


def test_gv_bound_rate_half():
    assert est.gv_bound(1000, 500) == 110
    assert est.gv_relative(0.5) == pytest.approx(0.110028, abs=1e-6)
    with pytest.raises(ValueError):
        est.gv_bound(10, 11)


def test_capacity_endpoints_and_order():
    assert est.capacity_curves(0.0) == pytest.approx((1.0, 1.0))
    assert est.capacity_curves(0.5) == pytest.approx((0.0, 0.0))
    for p in np.arange(0.0, 0.5005, 1e-3):
        bsc, uuv = est.capacity_curves(min(float(p), 0.5))
        # the (U, U+V) noise model is never worse than the plain channel
        assert 0 <= bsc <= uuv + 1e-12 <= 1 + 1e-12
    with pytest.raises(ValueError):
        est.capacity_curves(0.6)


def test_distortion_curves_ordering():
    for R in np.linspace(0.05, 0.95, 19):
        d = est.distortion_curves(float(R))
        # the generic decoder is the worst and GV the best achievable
        assert d["gv"] <= d["v2"] + 1e-12
        assert d["gv"] <= d["prange"] + 1e-12
        assert d["v2"] <= d["prange"] + 1e-12
    d = est.distortion_curves(0.5)
    assert d["v2"] == pytest.approx((3 - math.sqrt(5)) / 4)
    assert d["prange"] == pytest.approx(0.25)


def test_uniform_w1_law_normalized():
    law = est.uniform_w1_law(200, 38)
    assert law.sum() == pytest.approx(1.0)
    assert not law[1::2].any()  # w1 has the parity of w
    # direct count: choose i disagreeing pairs, (w-i)/2 agreeing ones
    i = 10
    direct = math.comb(100, i) * math.comb(100 - i, 14) * 2**i / math.comb(200, 38)
    assert law[i] == pytest.approx(direct, rel=1e-9)


def test_prange_weight_law_is_binomial():
    law = est.prange_weight_law(12)
    assert law == pytest.approx([math.comb(12, j) / 4096 for j in range(13)])


def test_m_rs_at_n2000():
    p = SurfParams(n=2000, k_U=618, k_V=382, w=382, lam=80)
    assert est.m_rs(p) == pytest.approx(2.545, abs=0.01)
    x, M = est.no_rejection_vector(2000, 382, 382)
    assert M == pytest.approx(est.m_rs(p))
    assert x.max() == pytest.approx(1.0)


def test_expected_eliminations_components():
    p = select_params(4800, 80)
    e = est.expected_eliminations(p)
    assert e["total"] == pytest.approx(e["M_rs"] + e["erasure_step"] + e["u_stage"])
    assert e["invertible_draws"] > e["total"]
    # frozen from this implementation; the empirical decoder count at this length is 19.2 +- 0.9
    assert e["total"] == pytest.approx(20.12, abs=0.05)


@pytest.mark.parametrize("lam,n", [(80, 4800), (128, 7700), (256, 15400)])
def test_epsilon_is_finite_and_tiny(lam, n):
    p = select_params(n, lam)
    eps = est.epsilon_bound(p).log2_value
    assert math.isfinite(eps) and eps < -2 * lam


def test_epsilon_toy_matches_direct_sum():
    p = SurfParams(n=20, k_U=4, k_V=3, w=6, lam=8)
    h, w = 10, 6
    cnw = math.comb(20, 6)
    t1 = 2 ** (20 - 7) / cnw
    t2 = 2 ** (h - 4) * math.comb(h, 3) / cnw
    t3 = sum(
        2 ** (h - 3) * 4**j * math.comb(h, (w - j) // 2) ** 2 * math.comb(h - (w - j) // 2, j) ** 2
        / (math.comb(h, j) * cnw**2)
        for j in range(0, w + 1, 2)
    )
    assert 2 ** est.epsilon_bound(p).log2_value == pytest.approx(t1 + t2 + t3, rel=1e-9)


def test_dumer_c1():
    assert est.dumer_c1(10, 0, 2).log2_value == pytest.approx(math.log2(45))
    assert est.dumer_c1(100, 20, 2).log2_value == pytest.approx(math.log2(math.comb(120, 2)) / 2)
    with pytest.raises(ValueError):
        est.dumer_c1(3, 1, 5)


def test_doom_monotone_in_weight():
    wf = [est.doom_workfactor(400, 200, w).wf_log2 for w in (44, 60, 76)]
    assert wf[0] > wf[1] > wf[2]


def test_doom_more_instances_never_hurt():
    fixed = [est.doom_workfactor(400, 200, 60, q=q).wf_log2 for q in (0.0, 4.0, 8.0)]
    best = est.doom_workfactor(400, 200, 60).wf_log2
    assert best <= min(fixed) + 1e-9
    single = est.doom_workfactor(400, 200, 60, regime="single").wf_log2
    assert best <= single + 1e-9


@pytest.mark.parametrize(
    "ratio,wfq,wfm",
    [(0.11, 0.0872, 0.1152), (0.15, 0.0448, 0.0535), (0.19, 0.0171, 0.0184)],
)
def test_exponent_table_rate_half(ratio, wfq, wfm):
    e = est.asymptotic_exponents(ratio)
    assert e["WFq/n"] == pytest.approx(wfq, abs=0.002)
    assert e["WF/n"] == pytest.approx(wfm, abs=0.002)


def test_exponent_table_frozen_values():
    # frozen from this implementation at n = 100000
    got = [est.asymptotic_exponents(r) for r in (0.11, 0.15, 0.19)]
    assert [round(g["WFq/n"], 5) for g in got] == [0.08718, 0.04494, 0.01715]
    assert [round(g["WF/n"], 5) for g in got] == [0.11514, 0.05365, 0.01852]
    assert got[1]["log2M/n"] == pytest.approx(0.1098, abs=5e-4)
