"""Structural attacks on permuted (U, U+V) codes.

The hull distinguisher is polynomial: a permuted ``(U, U+V)`` code with
``k_U > k_V`` has a hull of dimension ``k_U - k_V`` made of ``(u, u)``-type
words, whereas a random code has an ``O(1)`` hull.  ``compute_v`` and its
``U`` twin are the generic low-weight-codeword attacks whose cost sets the
key-security parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Literal

import numpy as np

from .codes import LinearCode, hull_generator
from .estimator import dumer_c1, log2_binom
from .f2linalg import BitMatrix, BitVector, Permutation, gauss_jordan, pack_bits, unpack_bits


class EmptyHull(ValueError):
    """The hull is trivial, so there is nothing to match."""


# ---------------------------------------------------------------- distinguisher


@dataclass(frozen=True)
class DistinguisherVerdict:
    hull_dim: int
    predicted: Literal["Public", "Random"]
    expected_pub_dim: int


def hull_dimension(C: LinearCode) -> int:
    return hull_generator(C).rows


def hull_distinguish(C: LinearCode, k_U: int, k_V: int) -> DistinguisherVerdict:
    """Predict ``Public`` iff ``dim hull(C) == k_U - k_V``."""
    if k_U < k_V:
        raise ValueError("distinguisher needs k_U >= k_V")
    d = hull_dimension(C)
    expected = k_U - k_V
    return DistinguisherVerdict(d, "Public" if d == expected else "Random", expected)


@dataclass(frozen=True)
class MatchedPairs:
    pairs: tuple[tuple[int, int], ...]
    residual: tuple[int, ...]


def recover_matched_pairs(C: LinearCode) -> MatchedPairs:
    """Pair up coordinates whose hull-generator columns coincide.

    Only column groups of size exactly two become pairs; larger groups are
    ambiguous and land in ``residual`` together with zero columns.
    """
    G = hull_generator(C)
    if G.rows == 0:
        raise EmptyHull("hull of the code is {0}")
    cols = pack_bits(G.bits().T)  # one packed key per coordinate
    groups: dict[bytes, list[int]] = {}
    residual: list[int] = []
    for j in range(C.n):
        key = cols[j].tobytes()
        if not cols[j].any():
            residual.append(j)
            continue
        groups.setdefault(key, []).append(j)
    pairs = []
    for members in groups.values():
        if len(members) == 2:
            pairs.append((members[0], members[1]))
        else:
            residual.extend(members)
    return MatchedPairs(tuple(sorted(pairs)), tuple(sorted(residual)))


def hull_u_basis(C: LinearCode, pairs: MatchedPairs) -> BitMatrix:
    """Hull basis restricted to the first coordinate of each matched pair.

    On a permuted ``(U, U+V)`` code this spans a permuted copy of
    ``U cap V^perp``.
    """
    G = hull_generator(C)
    first = [i for i, _ in pairs.pairs]
    return G.columns(first)


# ---------------------------------------------------------------- ComputeV / ComputeU


def _f(log2x: np.ndarray) -> np.ndarray:
    """``f(x) = max(x (1 - x/2), 1 - 1/x)`` from ``log2 x``."""
    lx = np.asarray(log2x, dtype=float)
    with np.errstate(over="ignore", under="ignore"):
        x = np.exp2(np.clip(lx, -1100, 1100))
        a = x * (1 - x / 2)
        b = np.where(x > 0, 1 - 1 / np.where(x > 0, x, 1), -np.inf)
        out = np.maximum(a, b)
    out = np.where(lx == -np.inf, 0.0, out)
    return np.clip(out, 0.0, 1.0)


def f_lemma(x: float) -> float:
    return float(_f(np.array(math.log2(x) if x > 0 else -np.inf)))


def _log2_hyp_v(n: int, k: int, l: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``log2 P(W = w)`` for ``|I cap second half| = w``, rows over ``l``."""
    h = n // 2
    t = (n - k - np.asarray(l))[:, None]
    w = np.arange(h + 1)[None, :]
    return w, log2_binom(h, w) + log2_binom(h, t - w) - log2_binom(n, t)


def psucc_v_lower_bound_grid(n: int, k: int, k_V: int, p: int, l) -> np.ndarray:
    """``psucc_v_lower_bound`` for one ``p`` and an array of ``l``."""
    h = n // 2
    w, lhyp = _log2_hyp_v(n, k, np.atleast_1d(l))
    lx = log2_binom(h - w, p) + (k_V + w - h)
    ok = np.isfinite(lhyp)
    terms = np.where(ok, np.exp2(np.where(ok, lhyp, 0.0)) * _f(np.broadcast_to(lx, lhyp.shape)), 0.0)
    return np.minimum(1.0, terms.sum(axis=1))


def psucc_v_lower_bound(n: int, k: int, k_V: int, p: int, l: int) -> float:
    """Lower bound on one ComputeV iteration finding an element of ``V'``."""
    return float(psucc_v_lower_bound_grid(n, k, k_V, p, [l])[0])


def psucc_u_lower_bound_grid(n: int, k: int, k_U: int, p: int, l) -> np.ndarray:
    """``psucc_u_lower_bound`` for one ``p`` and an array of ``l``."""
    h = n // 2
    m = (k + np.atleast_1d(l))[:, None]
    w = np.arange(h + 1)[None, :]
    with np.errstate(invalid="ignore"):
        lw = log2_binom(h, w) + log2_binom(h - w, m - 2 * w) + (m - 2 * w) - log2_binom(n, m)
        r = np.maximum(0, m - w - k_U)
        best = np.zeros(lw.shape)
        for i in range(p // 2 + 1):
            lx = log2_binom(m - 2 * w, p - 2 * i) + log2_binom(w, i) - r
            best = np.maximum(best, _f(lx))
    ok = np.isfinite(lw)
    terms = np.where(ok, np.exp2(np.where(ok, lw, 0.0)) * best, 0.0)
    return np.minimum(1.0, terms.sum(axis=1))


def psucc_u_lower_bound(n: int, k: int, k_U: int, p: int, l: int) -> float:
    """Lower bound on one ComputeU iteration finding an element of ``U'``."""
    return float(psucc_u_lower_bound_grid(n, k, k_U, p, [l])[0])


def _weight_p_words(Hp: np.ndarray, p: int) -> list[tuple[int, ...]]:
    """Supports of weight ``p`` annihilated by the parity matrix ``Hp`` (bits)."""
    m = Hp.shape[1]
    cols = [int.from_bytes(np.packbits(Hp[:, j], bitorder="little").tobytes(), "little") for j in range(m)]
    found = []
    for supp in combinations(range(m), p):
        acc = 0
        for j in supp:
            acc ^= cols[j]
        if acc == 0:
            found.append(supp)
    return found


def _span_contains(basis: list[np.ndarray], x: np.ndarray) -> bool:
    if not basis:
        return not x.any()
    M = np.vstack(basis + [x])
    words = pack_bits(M)
    return len(gauss_jordan(words, range(M.shape[1]))) == len(basis)


def compute_v(
    C_pub: LinearCode,
    p: int,
    l: int,
    N: int,
    rng: np.random.Generator,
    check: Callable[[BitVector], bool],
    *,
    stop_at_first: bool = False,
) -> tuple[list[BitVector], int]:
    """ComputeV with an exhaustive weight-``p`` codeword search.

    Each iteration punctures ``C_pub`` on a random set ``I`` of size
    ``n - k - l``, lists all weight-``p`` words of the punctured code, lifts
    each back to ``C_pub`` and keeps those accepted by ``check`` that are
    independent of the ones already kept.  When puncturing is not injective
    the lift is a coset of the codewords supported on ``I`` and every
    element of it is checked.  Returns the basis list and the
    number of iterations that contributed at least one candidate passing
    ``check``.
    """
    n, k = C_pub.n, C_pub.k
    t = n - k - l
    if t < 0:
        raise ValueError("need l <= n - k")
    G = C_pub.generator().bits()
    basis: list[np.ndarray] = []
    hits = 0
    for _ in range(N):
        I = rng.choice(n, size=t, replace=False)
        keep = np.setdiff1d(np.arange(n), I)
        Gk = G[:, keep]
        # reduce (Gk^T | I): the top rows invert the puncturing, the rest are parity checks
        aug = pack_bits(np.hstack([Gk.T, np.eye(len(keep), dtype=np.uint8)]))
        piv = gauss_jordan(aug, range(k))
        rho = len(piv)
        full = unpack_bits(aug, k + len(keep)).reshape(len(keep), -1)
        Hp = full[rho:, k:]
        inv = full[:rho, k:]
        kernel = _puncture_kernel(full[:rho, :k], piv, k) @ G & 1
        ok_iter = False
        for supp in _weight_p_words(Hp, p):
            x = np.zeros(len(keep), dtype=np.uint8)
            x[list(supp)] = 1
            m = np.zeros(k, dtype=np.uint8)
            m[np.asarray(piv, dtype=np.intp)] = (inv @ x) & 1
            for c in _coset((m @ G) & 1, kernel):
                if check(BitVector.from_bits(c)):
                    ok_iter = True
                    if not _span_contains(basis, c):
                        basis.append(c.astype(np.uint8))
        if ok_iter:
            hits += 1
            if stop_at_first:
                break
    return [BitVector.from_bits(b) for b in basis], hits


COSET_CAP_LOG2 = 12


def _puncture_kernel(R: np.ndarray, piv: list[int], k: int) -> np.ndarray:
    """Messages whose codewords vanish outside ``I``, from the reduced ``Gk^T``."""
    free = [j for j in range(k) if j not in set(piv)]
    K = np.zeros((len(free), k), dtype=np.uint8)
    for a, f in enumerate(free):
        K[a, f] = 1
        K[a, np.asarray(piv, dtype=np.intp)] = R[:, f]
    return K


def _coset(c: np.ndarray, kernel: np.ndarray):
    """``c + span(kernel)``; only the first ``COSET_CAP_LOG2`` generators are used."""
    K = kernel[:COSET_CAP_LOG2]
    yield c
    for mask in range(1, 1 << K.shape[0]):
        sel = [(mask >> b) & 1 for b in range(K.shape[0])]
        yield c ^ (np.asarray(sel, dtype=np.uint8) @ K & 1)


compute_u = compute_v


def planted_checks(perm: Permutation, V: LinearCode, U: LinearCode):
    """Exact membership oracles for ``V' = (0, V)P`` and ``U' = (U, U)P``."""
    inv = perm.inverse()
    h = V.n

    def check_v(x: BitVector) -> bool:
        b = inv.apply(x).bits()
        return bool(b.any()) and not b[:h].any() and V.contains(BitVector.from_bits(b[h:]))

    def check_u(x: BitVector) -> bool:
        b = inv.apply(x).bits()
        return bool(b.any()) and bool(np.array_equal(b[:h], b[h:])) and U.contains(BitVector.from_bits(b[:h]))

    return check_v, check_u


def weight_threshold_check(n: int, k: int, sigmas: float = 2.0) -> Callable[[BitVector], bool]:
    """Blind CheckV: flag words lighter than ``E - sigmas * sd`` of a random codeword."""
    threshold = n / 2 - sigmas * math.sqrt(n) / 2

    def check(x: BitVector) -> bool:
        wt = x.weight()
        return 0 < wt < threshold

    return check


# ---------------------------------------------------------------- cost


@dataclass(frozen=True)
class AttackCost:
    C_U: float
    C_V: float
    arg_U: tuple[int, int]
    arg_V: tuple[int, int]
    C_U_dual: float
    C_V_dual: float


BASE_P = range(1, 11)
BASE_L = range(1, 61)


def _min_cost(grid_bound, k: int, p_range, l_range) -> tuple[float, tuple[int, int]]:
    best, arg = math.inf, (0, 0)
    ls = np.asarray(list(l_range))
    for p in p_range:
        ok = p <= k + ls
        if not ok.any():
            continue
        lv = ls[ok]
        c1 = log2_binom(k + lv, p)
        c1 = np.maximum(c1 / 2, c1 - lv)
        ps = grid_bound(p, lv)
        with np.errstate(divide="ignore"):
            c = np.where(ps > 0, c1 - np.log2(np.where(ps > 0, ps, 1.0)), np.inf)
        j = int(np.argmin(c))
        if c[j] < best:
            best, arg = float(c[j]), (int(p), int(lv[j]))
    return best, arg


def structural_attack_cost(n: int, k: int, k_U: int, k_V: int, p_range=BASE_P, l_range=BASE_L) -> AttackCost:
    """``log2`` of ``C_1(p,l) / P_succ`` minimized for both attacks and their duals.

    The default box is ``p <= 10``, ``l <= 60``.  At cryptographic lengths the
    optimum sits on that box's edge; pass wider ranges (or use
    ``structural_attack_cost_unbounded``) for the true minimum.

    The dual of ``(U, U+V)`` is ``(V^perp + U^perp, V^perp)``, again of that
    shape with ``U``-part ``V^perp`` and ``V``-part ``U^perp``.
    """
    h = n // 2
    kd = n - k
    cu, au = _min_cost(lambda p, l: psucc_u_lower_bound_grid(n, k, k_U, p, l), k, p_range, l_range)
    cv, av = _min_cost(lambda p, l: psucc_v_lower_bound_grid(n, k, k_V, p, l), k, p_range, l_range)
    cud, _ = _min_cost(lambda p, l: psucc_u_lower_bound_grid(n, kd, h - k_V, p, l), kd, p_range, l_range)
    cvd, _ = _min_cost(lambda p, l: psucc_v_lower_bound_grid(n, kd, h - k_U, p, l), kd, p_range, l_range)
    return AttackCost(C_U=cu, C_V=cv, arg_U=au, arg_V=av, C_U_dual=cvd, C_V_dual=cud)
