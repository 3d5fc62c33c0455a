"""Binary linear codes held as full-rank parity-check matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .f2linalg import (
    BitMatrix,
    BitVector,
    DimensionError,
    gauss_jordan,
    kernel_basis,
    mat_vec_mul_transposed,
)
from .estimator import log2_binom, log2_sub


class DimensionTooLarge(ValueError):
    """Exhaustive enumeration refused: code dimension above the guard."""


class RankDeficient(ValueError):
    """A parity-check matrix that was required to be full rank is not."""


def _independent_rows(H: BitMatrix) -> BitMatrix:
    # eliminate on the transpose: its pivot columns are independent rows of H
    Ht = BitMatrix.from_bits(H.bits().T)
    w = Ht.words.copy()
    piv = gauss_jordan(w, range(Ht.cols))
    return H.select_rows(sorted(piv))


class LinearCode:
    """An ``[n, k]`` binary code ``{x : H x^T = 0}``.

    Dependent parity rows are dropped at construction so that
    ``parity.rows == n - k`` always holds.
    """

    __slots__ = ("n", "parity", "_gen")

    def __init__(self, parity: BitMatrix):
        self.n = parity.cols
        self.parity = _independent_rows(parity) if parity.rows else parity
        self._gen: BitMatrix | None = None

    @property
    def k(self) -> int:
        return self.n - self.parity.rows

    @classmethod
    def full_space(cls, n: int) -> "LinearCode":
        return cls(BitMatrix.zeros(0, n))

    @classmethod
    def from_generator(cls, G: BitMatrix) -> "LinearCode":
        return cls(kernel_basis(G))

    @classmethod
    def random(cls, n: int, k: int, rng: np.random.Generator) -> "LinearCode":
        from .f2linalg import random_full_rank

        return cls(random_full_rank(n - k, n, rng))

    def generator(self) -> BitMatrix:
        if self._gen is None:
            self._gen = kernel_basis(self.parity)
        return self._gen

    def syndrome(self, x: BitVector) -> BitVector:
        return mat_vec_mul_transposed(self.parity, x)

    def contains(self, x: BitVector) -> bool:
        return self.syndrome(x).weight() == 0

    def codewords(self) -> Iterator[BitVector]:
        """All ``2^k`` codewords (guarded at ``k <= 24``)."""
        bits = self._codeword_bits()
        for row in bits:
            yield BitVector.from_bits(row)

    def _codeword_bits(self) -> np.ndarray:
        if self.k > 24:
            raise DimensionTooLarge(f"k = {self.k} exceeds enumeration guard 24")
        G = self.generator().bits().astype(np.uint8)
        k = G.shape[0]
        if k == 0:
            return np.zeros((1, self.n), dtype=np.uint8)
        msgs = ((np.arange(1 << k, dtype=np.int64)[:, None] >> np.arange(k)) & 1).astype(np.uint8)
        return (msgs @ G) & 1

    def weight_distribution(self) -> np.ndarray:
        w = self._codeword_bits().sum(axis=1)
        return np.bincount(w, minlength=self.n + 1)

    def same_code(self, other: "LinearCode") -> bool:
        if self.n != other.n or self.k != other.k:
            return False
        G = other.generator()
        return all(self.contains(G.row(i)) for i in range(G.rows))

    def __repr__(self) -> str:
        return f"LinearCode[n={self.n}, k={self.k}]"


def dual(C: LinearCode) -> LinearCode:
    """``C^perp``: its parity-check matrix is a generator of ``C``."""
    return LinearCode(C.generator())


def hull(C: LinearCode) -> LinearCode:
    """``C cap C^perp`` as the kernel of the stacked parity matrices."""
    stacked = C.parity.vstack(C.generator())
    return LinearCode.from_generator(kernel_basis(stacked))


def hull_generator(C: LinearCode) -> BitMatrix:
    return kernel_basis(C.parity.vstack(C.generator()))


def puncture(C: LinearCode, positions: Sequence[int]) -> LinearCode:
    """Delete the coordinates in ``positions`` from every codeword."""
    drop = set(int(i) for i in positions)
    keep = [i for i in range(C.n) if i not in drop]
    if not drop:
        return C
    G = C.generator().columns(keep)
    if G.rows == 0:
        return LinearCode(BitMatrix.identity(len(keep)))
    return LinearCode.from_generator(G)


def support(x: BitVector) -> np.ndarray:
    return x.support()


@dataclass(frozen=True)
class UUVCode:
    """``{(u, u+v) : u in U, v in V}`` with its block parity matrix."""

    U: LinearCode
    V: LinearCode
    assembled: LinearCode
    H_U: BitMatrix
    H_V: BitMatrix

    @property
    def n(self) -> int:
        return self.assembled.n

    @property
    def half(self) -> int:
        return self.U.n

    @property
    def k_U(self) -> int:
        return self.U.k

    @property
    def k_V(self) -> int:
        return self.V.k

    @property
    def H_sec(self) -> BitMatrix:
        return self.assembled.parity

    def encode(self, u: BitVector, v: BitVector) -> BitVector:
        return u.concat(u ^ v)


def uuv_parity(H_U: BitMatrix, H_V: BitMatrix) -> BitMatrix:
    half = H_U.cols
    top = np.hstack([H_U.bits(), np.zeros((H_U.rows, half), dtype=np.uint8)])
    bot = np.hstack([H_V.bits(), H_V.bits()])
    return BitMatrix.from_bits(np.vstack([top, bot]).reshape(H_U.rows + H_V.rows, 2 * half))


def build_uuv(H_U: BitMatrix, H_V: BitMatrix, *, require_full_rank: bool = True) -> UUVCode:
    """Assemble the ``(U, U+V)`` code with parity ``[[H_U, 0], [H_V, H_V]]``.

    With ``require_full_rank=False`` dependent rows are tolerated and the
    assembled code simply has larger dimension.
    """
    if H_U.cols != H_V.cols:
        raise DimensionError(f"half lengths differ: {H_U.cols} vs {H_V.cols}")
    if not require_full_rank:
        U, V = LinearCode(H_U), LinearCode(H_V)
        return UUVCode(U=U, V=V, assembled=LinearCode(uuv_parity(H_U, H_V)), H_U=U.parity, H_V=V.parity)
    for name, H in (("H_U", H_U), ("H_V", H_V)):
        if H.rows and H.rank() != H.rows:
            raise RankDeficient(f"{name} is not full rank")
    U = LinearCode(H_U)
    V = LinearCode(H_V)
    H = uuv_parity(H_U, H_V)
    code = LinearCode.__new__(LinearCode)
    code.n = H.cols
    code.parity = H
    code._gen = None
    return UUVCode(U=U, V=V, assembled=code, H_U=H_U, H_V=H_V)


def random_uuv(n: int, k_U: int, k_V: int, rng: np.random.Generator) -> UUVCode:
    from .f2linalg import random_full_rank

    half = n // 2
    return build_uuv(random_full_rank(half - k_U, half, rng), random_full_rank(half - k_V, half, rng))


def min_distance_bruteforce(C: LinearCode) -> int:
    """Smallest nonzero codeword weight by exhaustive enumeration.

    Returns ``C.n + 1`` for the zero code, which has no nonzero word.
    """
    if C.k > 24:
        raise DimensionTooLarge(f"k = {C.k} exceeds enumeration guard 24")
    dist = C.weight_distribution()
    nz = np.flatnonzero(dist[1:])
    return int(nz[0]) + 1 if nz.size else C.n + 1


def expected_weight_enumerator(n: int, k_U: int, k_V: int, w: int) -> tuple[float, float, float, float]:
    """Expected weight-``w`` codeword counts for a random ``(U, U+V)`` code.

    Returns ``(a_uuv, a_uu, a_0v, a_rand)`` as log2 values (``-inf`` for 0).
    ``a_uu`` counts words ``(u, u)``, ``a_0v`` words ``(0, v)``, ``a_rand``
    is the count for a random code of the same dimension.
    """
    if n % 2:
        raise ValueError("n must be even")
    if not 0 <= w <= n:
        raise ValueError("weight out of range")
    h = n // 2
    k = k_U + k_V
    rand = log2_binom(n, w) - (n - k)
    a_0v = log2_binom(h, w) - (h - k_V)
    if w % 2 == 0:
        a_uu = log2_binom(h, w // 2) - (h - k_U)
        mixed = log2_sub(log2_sub(log2_binom(n, w), log2_binom(h, w)), log2_binom(h, w // 2))
    else:
        a_uu = float("-inf")
        mixed = log2_sub(log2_binom(n, w), log2_binom(h, w))
    a_mixed = mixed - (n - k)
    a_uuv = float(np.logaddexp2(np.logaddexp2(a_uu, a_0v), a_mixed))
    return a_uuv, a_uu, a_0v, rand


def weight_enumerator_by_type(code: UUVCode, w: int) -> tuple[int, int, int]:
    """Exact counts ``(total, (u,u)-type, (0,v)-type)`` at weight ``w``."""
    bits = code.assembled._codeword_bits()
    h = code.half
    wt = bits.sum(axis=1)
    sel = bits[wt == w]
    left, right = sel[:, :h], sel[:, h:]
    uu = int(np.all(left == right, axis=1).sum())
    zv = int((left.sum(axis=1) == 0).sum())
    return int(sel.shape[0]), uu, zv


def codeword_densities(n: int, k_U: int, k_V: int, w: int) -> tuple[float, float]:
    """``(alpha_uu, alpha_0v)``: ``(1/n) log2`` of ``a_uu(w)/a(w)`` and ``a_0v(w)/a(w)``."""
    _, a_uu, a_0v, a_rand = expected_weight_enumerator(n, k_U, k_V, w)
    return (a_uu - a_rand) / n, (a_0v - a_rand) / n
