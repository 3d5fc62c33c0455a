"""Source-distortion decoders built on Prange's information-set step.

``prange_decode`` returns a solution whose weight follows ``Binomial(n-k, 1/2)``;
the fixed-weight variants restart until the weight hits a target.  The two
``(U, U+V)`` decoders combine a V-stage decode with a U-stage decode that treats
the V error as erasures.  The second one rejection-samples the V stage so the
final error is uniform on the weight-``w`` sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .codes import UUVCode
from .estimator import no_rejection_vector
from .f2linalg import BitMatrix, BitVector, gauss_jordan, pack_bits, unpack_bits


class RestartBudgetExceeded(RuntimeError):
    """No information set produced the requested weight within the budget."""


class DependentErasureColumns(ValueError):
    """Columns of H on the erasure support are linearly dependent."""


class IterationBudgetExceeded(RuntimeError):
    """The rejection loop ran out of V-stage decodes."""


@dataclass
class DecodeStats:
    """Counters filled in by the decoders when passed as ``stats``."""

    eliminations: int = 0
    singular: int = 0
    v_decodes: int = 0
    u_restarts: int = 0
    dependent_erasures: int = 0
    u_failures: int = 0
    history: list = field(default_factory=list)


def _random_bits_53(rng: np.random.Generator) -> float:
    return int(rng.integers(0, 1 << 53)) / float(1 << 53)


def _prange_attempt(Hb: np.ndarray, s: np.ndarray, I: np.ndarray) -> np.ndarray | None:
    """Solve ``H_I e_I^T = s^T``; ``None`` if the square block is singular."""
    r = Hb.shape[0]
    aug = pack_bits(np.hstack([Hb[:, I], s[:, None]]))
    piv = gauss_jordan(aug, range(r))
    if len(piv) < r:
        return None
    rhs = unpack_bits(aug[:, r // 64 : r // 64 + 1], 64)[:, r % 64]
    e = np.zeros(Hb.shape[1], dtype=np.uint8)
    e[I] = rhs
    return e


def _prange_bits(Hb: np.ndarray, s: np.ndarray, rng: np.random.Generator, stats: DecodeStats | None) -> np.ndarray:
    r, n = Hb.shape
    while True:
        I = rng.choice(n, size=r, replace=False) if r else np.zeros(0, dtype=np.int64)
        if stats is not None:
            stats.eliminations += 1
        e = _prange_attempt(Hb, s, I)
        if e is not None:
            return e
        if stats is not None:
            stats.singular += 1


def prange_decode(H: BitMatrix, s: BitVector, rng: np.random.Generator, *, stats: DecodeStats | None = None) -> BitVector:
    """One Prange step: random ``I`` of size ``n - k``, ``e_I = H_I^{-1} s``.

    ``I`` is redrawn whole whenever ``H_I`` is singular.
    """
    if s.len != H.rows:
        raise ValueError(f"syndrome length {s.len} vs {H.rows} parity rows")
    return BitVector.from_bits(_prange_bits(H.bits(), s.bits(), rng, stats))


def _fixed_bits(Hb, s, target, rng, max_restarts, stats):
    r = Hb.shape[0]
    if target > r:
        raise ValueError(f"target weight {target} exceeds n - k = {r}")
    budget = 200 * max(r, 1) if max_restarts is None else max_restarts
    for _ in range(budget):
        e = _prange_bits(Hb, s, rng, stats)
        if int(e.sum()) == target:
            return e
        if stats is not None:
            stats.u_restarts += 1
    raise RestartBudgetExceeded(f"weight {target} not reached in {budget} restarts (n - k = {r})")


def prange_decode_fixed(
    H: BitMatrix,
    s: BitVector,
    target_weight: int,
    rng: np.random.Generator,
    max_restarts: int | None = None,
    *,
    stats: DecodeStats | None = None,
) -> BitVector:
    """Prange restarted until ``|e| == target_weight``.

    The default budget is ``200 (n - k)`` decodes.
    """
    return BitVector.from_bits(_fixed_bits(H.bits(), s.bits(), target_weight, rng, max_restarts, stats))


@dataclass(frozen=True)
class ErasureContext:
    """What is needed to lift a solution of the reduced system back."""

    n: int
    erased: np.ndarray  # Supp(x), in pivot order
    kept: np.ndarray  # complement of Supp(x)
    H_prime: np.ndarray  # rho x (n - rho) block next to the identity
    s_prime: np.ndarray  # first rho syndrome bits after the transform

    def reassemble(self, e2: BitVector | np.ndarray) -> BitVector:
        return BitVector.from_bits(self.reassemble_bits(e2.bits() if isinstance(e2, BitVector) else e2))

    def reassemble_bits(self, e2: np.ndarray) -> np.ndarray:
        e = np.zeros(self.n, dtype=np.uint8)
        e[self.kept] = e2
        e[self.erased] = (self.s_prime + (self.H_prime @ e2)) & 1
        return e


def _erasure_reduce_bits(Hb: np.ndarray, s: np.ndarray, erased: np.ndarray):
    r, n = Hb.shape
    rho = erased.size
    kept = np.setdiff1d(np.arange(n), erased)
    # columns: erased first, then kept, then the syndrome
    aug = pack_bits(np.hstack([Hb[:, erased], Hb[:, kept], s[:, None]]))
    piv = gauss_jordan(aug, range(rho))
    if len(piv) < rho:
        raise DependentErasureColumns(f"erasure columns have rank {len(piv)} < {rho}")
    full = unpack_bits(aug, n + 1).reshape(r, n + 1)
    H_prime = full[:rho, rho:n]
    H2 = full[rho:, rho:n]
    s_all = full[:, n]
    ctx = ErasureContext(n=n, erased=erased, kept=kept, H_prime=H_prime, s_prime=s_all[:rho].copy())
    return np.ascontiguousarray(H2), s_all[rho:].copy(), ctx


def erasure_reduce(H: BitMatrix, s: BitVector, x: BitVector) -> tuple[BitMatrix, BitVector, ErasureContext]:
    """Eliminate on the erased columns: ``S H = [[I, H'], [0, H'']]``.

    Returns ``(H'', s'', ctx)`` where ``(s', s'') = s S^T``.  Any ``e2`` with
    ``H'' e2^T = s''^T`` lifts through ``ctx.reassemble`` to a solution of
    ``H e^T = s^T`` that agrees with ``e2`` off the erasures.
    """
    if x.len != H.cols:
        raise ValueError("erasure pattern length differs from code length")
    H2, s2, ctx = _erasure_reduce_bits(H.bits(), s.bits(), x.support())
    return BitMatrix.from_bits(H2.reshape(H2.shape[0], H.cols - ctx.erased.size)), BitVector.from_bits(s2), ctx


def _erasure_reduce_partial(Hb: np.ndarray, s: np.ndarray, erased: np.ndarray, rng: np.random.Generator):
    """Like ``_erasure_reduce_bits`` but tolerates dependent erased columns.

    Elimination pivots on a maximal independent subset of the erased columns.
    The remaining erased coordinates do not touch the lower rows; they get
    uniform bits and are folded into the syndrome.  Returns ``(H'', s'', lift)``.
    """
    r, n = Hb.shape
    m = erased.size
    kept = np.setdiff1d(np.arange(n), erased)
    aug = pack_bits(np.hstack([Hb[:, erased], Hb[:, kept], s[:, None]]))
    piv = gauss_jordan(aug, range(m))
    rho = len(piv)
    full = unpack_bits(aug, n + 1).reshape(r, n + 1)
    free_pos = np.setdiff1d(np.arange(m), piv)
    f = rng.integers(0, 2, size=free_pos.size, dtype=np.uint8)
    piv_cols = erased[np.asarray(piv, dtype=np.int64)]
    free_cols = erased[free_pos]
    top_free = full[:rho][:, free_pos]
    top_kept = full[:rho, m:n]
    s_top = (full[:rho, n] + top_free @ f) & 1

    def lift(e2: np.ndarray) -> np.ndarray:
        e = np.zeros(n, dtype=np.uint8)
        e[kept] = e2
        e[free_cols] = f
        e[piv_cols] = (s_top + top_kept @ e2) & 1
        return e

    return np.ascontiguousarray(full[rho:, m:n]), full[rho:, n].copy(), lift


def _erasure_fixed_bits(Hb, s, erased, nu, rng, max_restarts, stats, *, absorb_dependent: bool = False):
    if absorb_dependent:
        H2, s2, lift = _erasure_reduce_partial(Hb, s, erased, rng)
        if stats is not None and H2.shape[0] > Hb.shape[0] - erased.size:
            stats.dependent_erasures += 1
    else:
        H2, s2, ctx = _erasure_reduce_bits(Hb, s, erased)
        lift = ctx.reassemble_bits
    if stats is not None:
        stats.eliminations += 1
    if nu > 0 and not s2.any():
        # every Prange output is 0 here, so weight nu is unreachable
        raise RestartBudgetExceeded(f"reduced syndrome is zero but weight {nu} was requested")
    e2 = _fixed_bits(H2, s2, nu, rng, max_restarts, stats)
    return lift(e2)


def prange_decode_erasure_fixed(
    H: BitMatrix,
    s: BitVector,
    x: BitVector,
    nu: int,
    rng: np.random.Generator,
    max_restarts: int | None = None,
    *,
    stats: DecodeStats | None = None,
) -> BitVector:
    """Solve ``H e^T = s^T`` with exactly ``nu`` ones outside ``Supp(x)``."""
    return BitVector.from_bits(_erasure_fixed_bits(H.bits(), s.bits(), x.support(), nu, rng, max_restarts, stats))


# ---------------------------------------------------------------- (U, U+V)


def w1(e: BitVector | np.ndarray) -> int:
    """``#{i : e_i != e_{i+n/2}}``."""
    b = e.bits() if isinstance(e, BitVector) else np.asarray(e)
    h = b.size // 2
    return int((b[:h] ^ b[h:]).sum())


def w2(e: BitVector | np.ndarray) -> int:
    """``#{i : e_i = e_{i+n/2} = 1}``."""
    b = e.bits() if isinstance(e, BitVector) else np.asarray(e)
    h = b.size // 2
    return int((b[:h] & b[h:]).sum())


def v1_target(half: int, k_U: int, k_V: int) -> int:
    """V-stage weight for the constant-weight decoder: ``(n/2 - k_V)/2`` nudged to the parity of ``n/2 - k_U``."""
    t = (half - k_V) // 2
    if (half - k_U - t) % 2:
        t = t + 1 if t + 1 <= min(half - k_V, half - k_U) else t - 1
    return t


ABSORB = "absorb"
REDRAW = "redraw"
KEEP_WEIGHT = "keep_weight"
U_STAGE_RETRIES = 64
V1_REDRAWS = 256


def _absorb(policy: str) -> bool:
    """``redraw`` discards ``e_V`` when its erased columns are dependent;
    ``absorb`` eliminates on a maximal independent subset of them instead.
    Either is uniform once U-stage failures keep the accepted weight."""
    if policy not in (ABSORB, REDRAW):
        raise ValueError(f"unknown dependent-erasure policy {policy!r}")
    return policy == ABSORB


def _split(uuv: UUVCode, s1: BitVector, s2: BitVector):
    if s1.len != uuv.H_U.rows or s2.len != uuv.H_V.rows:
        raise ValueError("syndrome halves do not match the code")
    if 2 * uuv.k_U - uuv.k_V > uuv.half:
        raise ValueError("decoder needs 2 k_U - k_V <= n/2")
    return uuv.H_U.bits(), uuv.H_V.bits(), s1.bits(), s2.bits()


def uuv_decode_v1_bits(
    uuv: UUVCode, s1: BitVector, s2: BitVector, rng, *, stats=None, max_restarts=None, dependent_erasures: str = REDRAW
) -> np.ndarray:
    absorb = _absorb(dependent_erasures)
    HU, HV, b1, b2 = _split(uuv, s1, s2)
    half = uuv.half
    target = v1_target(half, uuv.k_U, uuv.k_V)
    for _ in range(V1_REDRAWS):
        eV = _fixed_bits(HV, b2, target, rng, max_restarts, stats)
        nu = (half - uuv.k_U - int(eV.sum())) // 2
        try:
            eU = _erasure_fixed_bits(HU, b1, np.flatnonzero(eV), nu, rng, max_restarts, stats, absorb_dependent=absorb)
        except DependentErasureColumns:
            if stats is not None:
                stats.dependent_erasures += 1
            continue
        except RestartBudgetExceeded:
            # the U stage cannot reach its weight for this e_V; redraw e_V
            if stats is not None:
                stats.u_failures += 1
            continue
        return np.concatenate([eU, eU ^ eV])
    raise RestartBudgetExceeded(f"U stage failed for {V1_REDRAWS} V-stage draws")


def uuv_decode_v1(uuv: UUVCode, s1: BitVector, s2: BitVector, rng: np.random.Generator, *, stats=None) -> BitVector:
    """Fixed-weight V stage then fixed-weight U stage with erasures.

    Output weight is the constant ``n/2 - k_U``.
    """
    return BitVector.from_bits(uuv_decode_v1_bits(uuv, s1, s2, rng, stats=stats))


@dataclass(frozen=True)
class RejectionTable:
    """No-rejection probabilities ``x_0..x_w`` and the constant ``M_rs``."""

    x: np.ndarray
    M_rs: float
    n: int
    k_V: int
    w: int

    def acceptance_probability(self) -> float:
        from .estimator import prange_weight_law

        p = prange_weight_law(self.n // 2 - self.k_V)
        m = min(p.size, self.x.size)
        return float((self.x[:m] * p[:m]).sum())


def build_rejection_table(params) -> RejectionTable:
    """Table with ``x_i = p_1^u(i) / (M_rs p(i))`` on indices of the parity of ``w``."""
    x, M = no_rejection_vector(params.n, params.k_V, params.w)
    x = np.minimum(x, 1.0)
    x.flags.writeable = False
    return RejectionTable(x=x, M_rs=M, n=params.n, k_V=params.k_V, w=params.w)


def uuv_decode_v2_bits(
    uuv: UUVCode,
    s1: BitVector,
    s2: BitVector,
    table: RejectionTable,
    rng: np.random.Generator,
    *,
    stats: DecodeStats | None = None,
    budget: int | None = None,
    max_restarts: int | None = None,
    dependent_erasures: str = REDRAW,
    on_u_failure: str = KEEP_WEIGHT,
) -> np.ndarray:
    absorb = _absorb(dependent_erasures)
    if on_u_failure not in (KEEP_WEIGHT, REDRAW):
        raise ValueError(f"unknown U-failure policy {on_u_failure!r}")
    keep_weight = on_u_failure == KEEP_WEIGHT
    HU, HV, b1, b2 = _split(uuv, s1, s2)
    w = table.w
    if table.n != uuv.n or table.k_V != uuv.k_V:
        raise ValueError("rejection table does not match the code")
    limit = 64 * math.ceil(table.M_rs) if budget is None else budget
    for _ in range(limit):
        eV = _prange_bits(HV, b2, rng, stats)
        if stats is not None:
            stats.v_decodes += 1
        i = int(eV.sum())
        u = _random_bits_53(rng)
        if i > w or (w - i) % 2 or u > table.x[i]:
            continue
        # i is now committed; U-stage failures redraw e_V at this same weight
        for attempt in range(U_STAGE_RETRIES if keep_weight else 1):
            if attempt:
                try:
                    eV = _fixed_bits(HV, b2, i, rng, max_restarts, stats)
                except RestartBudgetExceeded:
                    break
                if stats is not None:
                    stats.v_decodes += 1
            try:
                eU = _erasure_fixed_bits(
                    HU, b1, np.flatnonzero(eV), (w - i) // 2, rng, max_restarts, stats, absorb_dependent=absorb
                )
            except DependentErasureColumns:
                if stats is not None:
                    stats.dependent_erasures += 1
                continue
            except RestartBudgetExceeded:
                if stats is not None:
                    stats.u_failures += 1
                continue
            return np.concatenate([eU, eU ^ eV])
    raise IterationBudgetExceeded(f"no accepted V-stage decode in {limit} tries")


def uuv_decode_v2(
    uuv: UUVCode,
    s1: BitVector,
    s2: BitVector,
    table: RejectionTable,
    rng: np.random.Generator,
    *,
    stats: DecodeStats | None = None,
    budget: int | None = None,
) -> BitVector:
    """Rejection-sampled V stage, fixed-weight U stage with erasures.

    The V-stage weight ``i`` is kept with probability ``x_i`` (compared
    against a 53-bit uniform), so ``w_1`` of the output follows the law of a
    uniform weight-``w`` word.  Output weight is exactly ``w``.
    """
    return BitVector.from_bits(uuv_decode_v2_bits(uuv, s1, s2, table, rng, stats=stats, budget=budget))


Decoder = Callable[..., BitVector]


# ---------------------------------------------------------------- output statistics


@dataclass(frozen=True)
class ChiSquareReport:
    statistic: float
    dof: int
    p_value: float
    observed: np.ndarray
    expected: np.ndarray


def w1_chi_square(w1_values, n: int, w: int, min_expected: float = 5.0) -> ChiSquareReport:
    """Chi-square of observed ``w_1`` values against the uniform-sphere law.

    Sparse tail cells are pooled into their neighbours until each expected
    count reaches ``min_expected``.
    """
    from scipy.stats import chi2

    from .estimator import uniform_w1_law

    vals = np.asarray(w1_values, dtype=np.int64)
    law = uniform_w1_law(n, w)
    obs = np.bincount(vals, minlength=law.size)[: law.size].astype(float)
    if vals.size and (vals.max() >= law.size or vals.min() < 0):
        raise ValueError("w_1 value outside [0, w]")
    exp = law * vals.size
    cells_o, cells_e, acc_o, acc_e = [], [], 0.0, 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            cells_o.append(acc_o)
            cells_e.append(acc_e)
            acc_o = acc_e = 0.0
    if cells_e:
        cells_o[-1] += acc_o
        cells_e[-1] += acc_e
    o, e = np.array(cells_o), np.array(cells_e)
    if o.size < 2:
        return ChiSquareReport(0.0, 0, 1.0, o, e)
    stat = float(((o - e) ** 2 / e).sum())
    dof = o.size - 1
    return ChiSquareReport(stat, dof, float(chi2.sf(stat, dof)), o, e)


@dataclass(frozen=True)
class LeakReport:
    matched_rate: float
    unmatched_rate: float
    z: float
    p_value: float


def pairwise_leak_test(errors: np.ndarray) -> LeakReport:
    """Two-proportion z-test: ``P(e_i = e_{i+n/2} = 1)`` against ``P(e_i = e_j = 1)``, ``j != i + n/2``.

    ``errors`` is an ``(N, n)`` 0/1 array of same-weight vectors.  On the
    uniform sphere both rates equal ``t(t-1) / (n(n-1))``.
    """
    from scipy.stats import norm

    E = np.asarray(errors, dtype=np.int64)
    N, n = E.shape
    h = n // 2
    both = (E[:, :h] & E[:, h:]).sum()
    wt = E.sum(axis=1)
    all_pairs = (wt * (wt - 1) // 2).sum()
    n_matched = N * h
    n_unmatched = N * (n * (n - 1) // 2 - h)
    p1 = both / n_matched
    p2 = (all_pairs - both) / n_unmatched
    pool = all_pairs / (n_matched + n_unmatched)
    se = math.sqrt(pool * (1 - pool) * (1 / n_matched + 1 / n_unmatched)) if 0 < pool < 1 else 0.0
    z = (p1 - p2) / se if se > 0 else 0.0
    return LeakReport(float(p1), float(p2), float(z), float(2 * norm.sf(abs(z))))
