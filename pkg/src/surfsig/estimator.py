"""Closed-form analytics in the log2 domain.

Binomials come from ``lgamma`` so that sizes like ``C(15400, 2940)`` stay
finite; every distribution is returned as a plain float array whose entries
underflow harmlessly to zero.  Polynomial factors in ISD costs are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy.special import gammaln

LN2 = math.log(2.0)
NEG_INF = float("-inf")


class InfeasibleAlignment(ValueError):
    """The Prange weight law cannot cover the target ``w_1`` law."""


class _Params(Protocol):
    n: int
    k_U: int
    k_V: int
    w: int


# ---------------------------------------------------------------- log reals


def log2_binom(n, k):
    """``log2 C(n, k)``; ``-inf`` outside ``0 <= k <= n``.  Vectorized."""
    n_arr = np.asarray(n, dtype=float)
    k_arr = np.asarray(k, dtype=float)
    ok = (k_arr >= 0) & (k_arr <= n_arr)
    with np.errstate(invalid="ignore"):
        val = (gammaln(n_arr + 1) - gammaln(k_arr + 1) - gammaln(n_arr - k_arr + 1)) / LN2
    out = np.where(ok, val, -np.inf)
    return float(out) if out.ndim == 0 else out


def log2_binom_exact(n: int, k: int) -> float:
    if k < 0 or k > n:
        return NEG_INF
    c = math.comb(n, k)
    return math.log2(c)


def log2_add(a: float, b: float) -> float:
    return float(np.logaddexp2(a, b))


def log2_sub(a: float, b: float) -> float:
    """``log2(2^a - 2^b)`` for ``a >= b``."""
    if b == NEG_INF:
        return a
    if b > a + 1e-12:
        raise ValueError("log2_sub needs a >= b")
    d = b - a
    if d >= -1e-15:
        return NEG_INF
    return a + math.log2(-math.expm1(d * LN2))


@dataclass(frozen=True, order=True)
class LogReal:
    """A nonnegative real stored as its base-2 logarithm."""

    log2_value: float

    @classmethod
    def from_float(cls, x: float) -> "LogReal":
        if x < 0:
            raise ValueError("LogReal is nonnegative")
        return cls(math.log2(x) if x > 0 else NEG_INF)

    @classmethod
    def binom(cls, n: int, k: int) -> "LogReal":
        return cls(log2_binom(n, k))

    def __mul__(self, other: "LogReal") -> "LogReal":
        return LogReal(self.log2_value + other.log2_value)

    def __truediv__(self, other: "LogReal") -> "LogReal":
        return LogReal(self.log2_value - other.log2_value)

    def __add__(self, other: "LogReal") -> "LogReal":
        return LogReal(log2_add(self.log2_value, other.log2_value))

    def __sub__(self, other: "LogReal") -> "LogReal":
        return LogReal(log2_sub(self.log2_value, other.log2_value))

    def sqrt(self) -> "LogReal":
        return LogReal(self.log2_value / 2)

    def __float__(self) -> float:
        if self.log2_value == NEG_INF:
            return 0.0
        if abs(self.log2_value) >= 1000:
            raise OverflowError(f"2^{self.log2_value:.1f} is out of float range")
        return 2.0**self.log2_value


# ---------------------------------------------------------------- entropy, GV


def entropy(x: float) -> float:
    """Binary entropy ``h(x)`` in bits."""
    if x <= 0 or x >= 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def entropy_inverse(y: float) -> float:
    """``h^{-1}`` from ``[0, 1]`` onto ``[0, 1/2]`` by bisection."""
    if y <= 0:
        return 0.0
    if y >= 1:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(100):
        mid = (lo + hi) / 2
        if entropy(mid) < y:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def gv_bound(n: int, k: int) -> int:
    """``round(n h^{-1}(1 - k/n))``."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    return int(round(n * entropy_inverse(1 - k / n)))


def gv_relative(rate: float) -> float:
    return entropy_inverse(1 - rate)


def capacity_curves(p: float) -> tuple[float, float]:
    """``(1 - h(p), 1 - 2h(p) + h(2p(1-p)))`` for crossover ``p``."""
    if not 0 <= p <= 0.5:
        raise ValueError("crossover probability must lie in [0, 1/2]")
    bsc = 1 - entropy(p)
    uuv = 1 - 2 * entropy(p) + entropy(2 * p * (1 - p))
    return bsc, uuv


def distortion_curves(rate: float) -> dict[str, float]:
    """Relative signature distances at code rate ``R`` (k_U + k_V = R n).

    ``prange`` is the generic ``(1-R)/2``, ``gv`` is ``h^{-1}(1-R)``, ``v1``
    is ``(1 - 2R_U)/2`` with the optimal ``R_U``, and ``v2`` is the weight
    ratio of the parameter recipe ``(3 - sqrt(1 + 8R))/4``.
    """
    # v1 weight is n/2 - k_U; the decoder constraint 2k_U - k_V <= n/2
    # with k_U + k_V = Rn gives R_U = (1 + 2R)/6 at best.
    r_u = min((1 + 2 * rate) / 6, rate)
    return {
        "rate": rate,
        "prange": (1 - rate) / 2,
        "gv": gv_relative(rate),
        "v1": (1 - 2 * r_u) / 2,
        "v2": (3 - math.sqrt(1 + 8 * rate)) / 4,
    }


# ---------------------------------------------------------------- weight laws


def uniform_w1_law(n: int, w: int) -> np.ndarray:
    """Law of ``w_1(e) = #{i : e_i != e_{i+n/2}}`` for ``e`` uniform of weight ``w``.

    Entry ``i`` is ``2^i C(n/2,(w-i)/2) C(n/2-(w-i)/2, i) / C(n,w)`` when
    ``i = w mod 2`` and zero otherwise.
    """
    if n % 2:
        raise ValueError("n must be even")
    return np.exp2(log2_uniform_w1_law(n, w))


def log2_uniform_w1_law(n: int, w: int) -> np.ndarray:
    h = n // 2
    i = np.arange(w + 1)
    j = (w - i) // 2
    val = i + log2_binom(h, j) + log2_binom(h - j, i) - log2_binom(n, w)
    return np.where((w - i) % 2 == 0, val, -np.inf)


def log2_prange_weight_law(r: int, length: int | None = None) -> np.ndarray:
    m = r if length is None else length
    i = np.arange(m + 1)
    return log2_binom(r, i) - r


def prange_weight_law(r: int) -> np.ndarray:
    """``Binomial(r, 1/2)`` as an array of length ``r + 1``."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    return np.exp2(log2_prange_weight_law(r))


def _log2_rs_ratio(n: int, k_V: int, w: int) -> np.ndarray:
    """``log2(p_1^u(i) / p(i))`` for ``i = 0..w``; ``-inf`` where ``p_1^u = 0``."""
    r = n // 2 - k_V
    lu = log2_uniform_w1_law(n, w)
    lp = log2_prange_weight_law(r, length=w)
    bad = np.isfinite(lu) & ~np.isfinite(lp)
    if bad.any():
        raise InfeasibleAlignment(
            f"w_1 = {int(np.flatnonzero(bad)[0])} is reachable but the Prange law on r = {r} cannot produce it"
        )
    with np.errstate(invalid="ignore"):
        out = np.where(np.isfinite(lu), lu - lp, -np.inf)
    return out


def log2_m_rs(n: int, k_V: int, w: int) -> float:
    return float(np.max(_log2_rs_ratio(n, k_V, w)))


def m_rs(params: _Params) -> float:
    """``sup_i p_1^u(i) / p(i)`` over indices of the parity of ``w``."""
    return 2.0 ** log2_m_rs(params.n, params.k_V, params.w)


def no_rejection_vector(n: int, k_V: int, w: int) -> tuple[np.ndarray, float]:
    """``(x, M_rs)`` with ``x_i = p_1^u(i) / (M_rs p(i))``."""
    ratio = _log2_rs_ratio(n, k_V, w)
    lm = float(np.max(ratio))
    x = np.exp2(ratio - lm)
    return x, 2.0**lm


# ---------------------------------------------------------------- signing cost


def expected_eliminations(params: _Params) -> dict[str, float]:
    """Expected Gaussian eliminations per signature.

    The V stage runs one Prange decode per rejection-loop iteration, ``M_rs``
    on average.  The accepted ``|e_V| = i`` leaves a shortened U problem with
    ``w - i`` checks that must hit weight exactly ``(w - i)/2``; each Prange
    attempt there succeeds with the central binomial probability.  The
    ``invertible_draws`` entry multiplies by the mean number of random
    square submatrices drawn before one is invertible.
    """
    n, k_V, w = params.n, params.k_V, params.w
    x, M = no_rejection_vector(n, k_V, w)
    lu = log2_uniform_w1_law(n, w)
    # U stage: r'' = (n/2 - k_U) - i with n/2 - k_U = w in the recipe
    r_u = (n // 2 - params.k_U) - np.arange(w + 1)
    nu = (w - np.arange(w + 1)) // 2
    ok = np.isfinite(lu) & (r_u >= 0) & (nu <= r_u)
    lp_hit = np.where(ok, log2_binom(np.maximum(r_u, 0), nu) - np.maximum(r_u, 0), -np.inf)
    with np.errstate(invalid="ignore"):
        terms = np.where(ok, lu - lp_hit, -np.inf)
    u_stage = float(np.exp2(terms[np.isfinite(terms)]).sum())
    square = float(np.prod(1 - 0.5 ** np.arange(1, 65)))
    total = M + 1.0 + u_stage
    return {
        "M_rs": M,
        "v_stage": M,
        "erasure_step": 1.0,
        "u_stage": u_stage,
        "total": total,
        "invertible_draws": total / square,
    }


# ---------------------------------------------------------------- epsilon


def epsilon_bound(params: _Params) -> LogReal:
    """Bound ``eps`` on the syndrome distribution of a random public key.

    Three terms: ``2^{n-k}/C(n,w)``, ``2^{n/2-k_U} C(n/2,w/2)/C(n,w)`` and a
    sum over ``j = w mod 2`` of
    ``2^{n/2-k_V} 2^{2j} C(n/2,(w-j)/2)^2 C(n/2-(w-j)/2,j)^2 / (C(n/2,j) C(n,w)^2)``.
    For odd ``w`` the middle binomial uses the gamma-function extension.
    """
    n, k_U, k_V, w = params.n, params.k_U, params.k_V, params.w
    h = n // 2
    k = k_U + k_V
    lnw = log2_binom(n, w)
    t1 = (n - k) - lnw
    t2 = (h - k_U) + log2_binom(h, w / 2) - lnw
    j = np.arange(w % 2, w + 1, 2)
    a = (w - j) // 2
    terms = 2 * j + 2 * log2_binom(h, a) + 2 * log2_binom(h - a, j) - log2_binom(h, j) - 2 * lnw
    terms = terms[np.isfinite(terms)]
    m = float(terms.max())
    t3 = (h - k_V) + m + math.log2(float(np.exp2(terms - m).sum()))
    return LogReal(t1) + LogReal(t2) + LogReal(t3)


def log2_qhash_sqrt_eps(params: _Params, lam: int) -> float:
    """``log2(2^lam sqrt(eps))``."""
    return lam + epsilon_bound(params).log2_value / 2


# ---------------------------------------------------------------- ISD costs


def dumer_c1(k: int, l: int, p: int) -> LogReal:
    """``max(sqrt(C(k+l,p)), C(k+l,p) 2^-l)`` as a log2 value."""
    if p > k + l:
        raise ValueError("need p <= k + l")
    b = log2_binom(k + l, p)
    return LogReal(max(b / 2, b - l))


def log2_isd_success(n: int, k: int, w: int, p, l):
    """``log2 P(p, l) = log2 C(n-k-l, w-p) C(k+l, p) / C(n, w)``.  Vectorized."""
    return log2_binom(n - k - l, w - p) + log2_binom(k + l, p) - log2_binom(n, w)


def log2_multi_success(log2_p, log2_trials):
    """``log2(1 - (1 - P)^N)`` from ``log2 P`` and ``log2 N``, stably."""
    lp = np.asarray(log2_p, dtype=float)
    ln_ = np.asarray(log2_trials, dtype=float)
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        P = np.exp2(lp)
        c = np.where(P > 1e-8, -np.log1p(-np.minimum(P, 1.0)) / np.where(P > 0, P, 1.0), 1.0 + P / 2)
        y = lp + ln_
        z = np.exp2(y) * c
        small = z < 1e-6
        out = np.where(small, y + np.log2(c) + np.log2(1 - z / 2), np.log2(-np.expm1(-z)))
        out = np.where(np.isfinite(lp), out, -np.inf)
        out = np.where(P >= 1.0, 0.0, out)
    return out


@dataclass
class WorkfactorReport:
    regime: str
    wf_log2: float
    p: int
    l: int
    q_log2: float = 0.0
    M_log2: float = 0.0
    extra: dict = field(default_factory=dict)


def log2_solution_count(n: int, k: int, w: int) -> float:
    """``log2 max(1, C(n,w)/2^{n-k})``."""
    return max(0.0, log2_binom(n, w) - (n - k))


def default_search_box(n: int, k: int, w: int) -> tuple[int, int]:
    """Default ``(p_max, l_max)``: ``min(w, 40)`` and ``min(n-k, 24 log2 n)``."""
    return min(w, 40), int(min(n - k, 3 * math.log2(n) * 8))


def _doom_objective(n, k, w, p, l, regime, logM, q_cap):
    """Log2 workfactor on arrays of ``(p, l)`` plus the best ``log2 q``."""
    B = log2_binom(k + l, p)
    lp = log2_isd_success(n, k, w, p, l)
    if regime == "single":
        cost = np.maximum(B / 2, B - l)
        return cost - log2_multi_success(lp, np.zeros_like(lp)), np.zeros_like(lp)
    if regime == "multi_solution":
        cost = np.maximum(B / 2, B - l)
        return cost - log2_multi_success(lp, np.full_like(lp, logM)), np.zeros_like(lp)
    # doom: q ranges over [0, min(B, q_cap)]; the objective is piecewise
    # linear-ish in log q with breakpoints where the cost changes branch
    # (q = 2l - B) and where the success probability saturates (q = -P - M).
    hi = np.minimum(B, q_cap)
    hi = np.where(np.isfinite(hi), hi, 0.0)
    cands = [np.zeros_like(B), np.clip(2 * l - B, 0, hi), np.clip(-lp - logM, 0, hi), hi]
    best = np.full_like(B, np.inf)
    bestq = np.zeros_like(B)
    for q in cands:
        q = np.where(np.isfinite(q), q, 0.0)
        cost = np.maximum((q + B) / 2, q + B - l)
        val = cost - log2_multi_success(lp, q + logM)
        better = val < best - 1e-12
        with np.errstate(invalid="ignore"):
            tie = np.abs(val - best) <= 1e-12
        best = np.where(better, val, best)
        bestq = np.where(better | (tie & (q > bestq)), q, bestq)
    return best, bestq


def _grid_minimize(f, p_range, l_range, points=160):
    """Coarse-to-fine integer minimization of ``f(p, l)`` over a box."""
    (p0, p1), (l0, l1) = p_range, l_range
    while True:
        sp = max(1, (p1 - p0) // points)
        sl = max(1, (l1 - l0) // points)
        ps = np.arange(p0, p1 + 1, sp)
        ls = np.arange(l0, l1 + 1, sl)
        P, L = np.meshgrid(ps, ls, indexing="ij")
        val, extra = f(P.astype(float), L.astype(float))
        val = np.where(np.isfinite(val), val, np.inf)
        idx = np.unravel_index(int(np.argmin(val)), val.shape)
        bp, bl = int(P[idx]), int(L[idx])
        if sp == 1 and sl == 1:
            return float(val[idx]), bp, bl, float(extra[idx])
        p0, p1 = max(p_range[0], bp - 2 * sp), min(p_range[1], bp + 2 * sp)
        l0, l1 = max(l_range[0], bl - 2 * sl), min(l_range[1], bl + 2 * sl)


def doom_workfactor(
    n: int,
    k: int,
    w: int,
    q: str | float = "optimal",
    *,
    regime: str | None = None,
    p_max: int | None = None,
    l_max: int | None = None,
    q_cap_log2: float = math.inf,
) -> WorkfactorReport:
    """Dumer-style ISD workfactor, optionally with ``q`` target syndromes.

    ``regime`` is ``single`` (one solution), ``multi_solution`` (``M``
    solutions, ``q = 1``) or ``doom`` (``q`` instances).  A numeric ``q`` is
    a fixed log2 instance count; ``"optimal"`` lets the scan choose it.
    The ``(p, l)`` box defaults to :func:`default_search_box`.
    """
    if regime is None:
        regime = "doom"
    if w > n:
        raise ValueError("need w <= n")
    dp, dl = default_search_box(n, k, w)
    p_max = dp if p_max is None else min(p_max, w)
    l_max = dl if l_max is None else min(l_max, n - k)
    logM = log2_solution_count(n, k, w) if regime != "single" else 0.0
    cap = q_cap_log2 if q == "optimal" else float(q)

    def f(P, L):
        val, qq = _doom_objective(n, k, w, P, L, regime, logM, cap)
        if regime == "doom" and q != "optimal":
            B = log2_binom(k + L, P)
            val = np.where(B >= float(q), val, np.inf)
        return val, qq

    wf, p, l, qbest = _grid_minimize(f, (0, p_max), (0, l_max))
    return WorkfactorReport(regime=regime, wf_log2=wf, p=p, l=l, q_log2=qbest, M_log2=logM)


def asymptotic_exponents(w_ratio: float, rate: float = 0.5, n: int = 100_000) -> dict[str, float]:
    """Normalized exponents ``(1/n) log2`` of ``M``, ``q``, ``WF_q^(M)``, ``WF^(M)``.

    Evaluated at a large concrete ``n`` over the full ``(p, l)`` box.
    """
    k = int(round(rate * n))
    w = int(round(w_ratio * n))
    full = dict(p_max=w, l_max=n - k)
    multi = doom_workfactor(n, k, w, regime="multi_solution", **full)
    doom = doom_workfactor(n, k, w, regime="doom", **full)
    return {
        "w/n": w_ratio,
        "log2M/n": log2_solution_count(n, k, w) / n,
        "log2q/n": doom.q_log2 / n,
        "WFq/n": doom.wf_log2 / n,
        "WF/n": multi.wf_log2 / n,
    }
