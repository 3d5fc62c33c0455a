import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfsig import attack as A
from surfsig.codes import LinearCode, random_uuv
from surfsig.f2linalg import BitVector, random_permutation


def permuted_public_code(n, k_U, k_V, rng):
    code = random_uuv(n, k_U, k_V, rng)
    P = random_permutation(n, rng)
    return code, P, LinearCode(P.apply_columns(code.H_sec))


# ---------------------------------------------------------------- distinguisher


def test_distinguisher_accuracy_and_speed():
    rng = np.random.default_rng(100)
    pub = [permuted_public_code(120, 40, 20, rng)[2] for _ in range(50)]
    rnd = [LinearCode.random(120, 60, rng) for _ in range(50)]
    t = time.perf_counter()
    v_pub = [A.hull_distinguish(C, 40, 20) for C in pub]
    v_rnd = [A.hull_distinguish(C, 40, 20) for C in rnd]
    elapsed = time.perf_counter() - t
    correct = sum(v.predicted == "Public" for v in v_pub) + sum(v.predicted == "Random" for v in v_rnd)
    assert correct >= 99
    assert int(np.median([v.hull_dim for v in v_pub])) == 20
    assert elapsed < 1.0


def test_distinguisher_refuses_kU_below_kV():
    rng = np.random.default_rng(1)
    with pytest.raises(ValueError):
        A.hull_distinguish(LinearCode.random(20, 10, rng), 3, 5)


def test_matched_pairs_follow_the_permutation():
    rng = np.random.default_rng(2)
    h = 40
    code, P, C = permuted_public_code(2 * h, 24, 10, rng)
    mp = A.recover_matched_pairs(C)
    assert mp.pairs
    images = P.images
    for a, b in mp.pairs:
        # public column j carries secret column images[j]; pairs sit h apart there
        assert abs(images[a] - images[b]) == h
    assert len(mp.pairs) + len(mp.residual) // 2 <= h
    B = A.hull_u_basis(C, mp)
    assert B.rank() == A.hull_dimension(C)


def test_matched_pairs_empty_hull():
    with pytest.raises(A.EmptyHull):
        A.recover_matched_pairs(LinearCode.full_space(6))


# ---------------------------------------------------------------- success bounds


def test_f_lemma_values():
    assert A.f_lemma(0.0) == 0.0
    assert A.f_lemma(2.0) == pytest.approx(0.5)
    assert A.f_lemma(1.0) == pytest.approx(0.5)
    assert A.f_lemma(10.0) == pytest.approx(0.9)
    xs = np.linspace(0.01, 50, 400)
    vals = [A.f_lemma(float(x)) for x in xs]
    assert all(0 <= v <= 1 for v in vals)
    for x, v in zip(xs, vals):
        assert v == pytest.approx(min(1.0, max(0.0, x * (1 - x / 2), 1 - 1 / x)))
    assert A.f_lemma(1.5) < 0.5  # the two branches cross below 1/2


@given(st.integers(1, 6), st.integers(0, 20), st.integers(2, 14))
@settings(max_examples=60, deadline=None)
def test_bounds_are_probabilities_and_grid_agrees(p, l, k_V):
    n, k_U = 60, 30 - k_V if 30 - k_V >= k_V else k_V
    k = k_U + k_V
    if l > n - k:
        return
    bv = A.psucc_v_lower_bound(n, k, k_V, p, l)
    bu = A.psucc_u_lower_bound(n, k, k_U, p, l)
    assert 0 <= bv <= 1 and 0 <= bu <= 1
    grid_v = A.psucc_v_lower_bound_grid(n, k, k_V, p, np.array([l, l]))
    assert grid_v[0] == pytest.approx(bv)


def test_v_bound_by_direct_sum():
    n, k, k_V, p, l = 40, 20, 6, 2, 3
    h, t = 20, n - k - l
    total = 0.0
    for w in range(h + 1):
        pw = math.comb(h, w) * math.comb(h, t - w) / math.comb(n, t) if 0 <= t - w <= h else 0.0
        x = math.comb(h - w, p) * 2.0 ** (k_V + w - h)
        f = max(x * (1 - x / 2), 1 - 1 / x if x > 0 else 0.0, 0.0)
        total += pw * min(f, 1.0)
    assert A.psucc_v_lower_bound(n, k, k_V, p, l) == pytest.approx(min(total, 1.0), rel=1e-9)


def test_cost_monotone_under_grid_refinement():
    small = A.structural_attack_cost(800, 400, 247, 153, range(1, 5), range(1, 21))
    big = A.structural_attack_cost(800, 400, 247, 153, range(1, 9), range(1, 41))
    assert big.C_U <= small.C_U + 1e-9
    assert big.C_V <= small.C_V + 1e-9


def test_dual_shape_identity_at_rate_half():
    c = A.structural_attack_cost(800, 400, 247, 153)
    # at k = n/2 the dual has U-part dimension n/2 - k_V = k_U and V-part n/2 - k_U = k_V
    assert c.C_V_dual == pytest.approx(c.C_U)
    assert c.C_U_dual == pytest.approx(c.C_V)


def test_base_grid_costs_frozen():
    # frozen from this implementation (p <= 10, l <= 60) at the 80-bit length
    c = A.structural_attack_cost(4800, 2400, 1484, 916)
    assert c.C_V == pytest.approx(170.84, abs=0.01)
    assert c.C_U == pytest.approx(254.69, abs=0.01)
    assert c.arg_V[0] == 10 and c.arg_U[0] == 10  # optimum on the edge of the box


# ---------------------------------------------------------------- low-weight searches


def test_compute_v_returns_elements_of_v_prime():
    rng = np.random.default_rng(5)
    code, P, C = permuted_public_code(60, 18, 10, rng)
    check_v, _ = A.planted_checks(P, code.V, code.U)
    basis, hits = A.compute_v(C, 3, 4, 30, rng, check_v)
    assert hits > 0 and basis
    M = np.vstack([b.bits() for b in basis])
    assert np.linalg.matrix_rank(M.astype(float)) >= 1
    for b in basis:
        assert check_v(b)
    assert len(basis) <= 10


def test_compute_u_finds_u_prime():
    rng = np.random.default_rng(6)
    code, P, C = permuted_public_code(60, 20, 8, rng)
    _, check_u = A.planted_checks(P, code.V, code.U)
    basis, hits = A.compute_u(C, 2, 4, 10, rng, check_u, stop_at_first=True)
    assert hits == 1 and all(check_u(b) for b in basis)


def test_planted_checks_reject_zero_and_random():
    rng = np.random.default_rng(7)
    code, P, C = permuted_public_code(40, 12, 6, rng)
    cv, cu = A.planted_checks(P, code.V, code.U)
    assert not cv(BitVector.zeros(40)) and not cu(BitVector.zeros(40))
    g = C.generator().row_list()
    assert sum(cv(r) or cu(r) for r in g) < len(g)


def test_weight_threshold_check():
    chk = A.weight_threshold_check(100, 50)
    assert chk(BitVector.from_support(100, [1, 2, 3]))
    assert not chk(BitVector.zeros(100))
    assert not chk(BitVector.from_support(100, range(50)))


def test_compute_v_rejects_bad_l():
    rng = np.random.default_rng(8)
    with pytest.raises(ValueError):
        A.compute_v(LinearCode.random(20, 10, rng), 1, 11, 1, rng, lambda x: True)


class _FixedChoice:
    def __init__(self, I):
        self.I = I

    def choice(self, *args, **kwargs):
        return self.I


def test_compute_v_lifts_through_non_injective_punctures():
    # brute force over all of V: an iteration succeeds iff some V' word has weight p off I
    rng = np.random.default_rng(9)
    n, k_U, k_V, p, l = 60, 22, 6, 2, 2
    agree = non_injective = 0
    for _ in range(40):
        code, P, C = permuted_public_code(n, k_U, k_V, rng)
        check_v, _ = A.planted_checks(P, code.V, code.U)
        I = rng.choice(n, size=n - k_U - k_V - l, replace=False)
        keep = np.setdiff1d(np.arange(n), I)
        words = [P.apply(BitVector.from_bits(np.concatenate([np.zeros(n // 2, np.uint8), v]))).bits()
                 for v in code.V._codeword_bits()]
        ideal = any(int(wd[keep].sum()) == p for wd in words)
        non_injective += C.generator().columns(keep.tolist()).rank() < C.k
        _, hits = A.compute_v(C, p, l, 1, _FixedChoice(I), check_v)
        agree += bool(hits) == ideal
    assert agree == 40
    assert non_injective > 0
