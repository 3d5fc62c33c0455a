"""Bit-packed vectors and matrices over F2.

Bits live in little-endian ``uint64`` words: bit ``i`` of a row sits in word
``i // 64`` at position ``i % 64``.  Padding bits past the logical length are
always zero, so word-level equality is bit-level equality.

Every random primitive takes an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

WORD = 64
_ONE = np.uint64(1)


def n_words(nbits: int) -> int:
    return (nbits + WORD - 1) // WORD


def _pad_mask(nbits: int) -> np.uint64:
    rem = nbits % WORD
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a ``(..., nbits)`` 0/1 array into ``(..., n_words)`` uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8) & 1
    nbits = bits.shape[-1]
    nw = n_words(nbits)
    padded = np.zeros(bits.shape[:-1] + (nw * WORD,), dtype=np.uint8)
    padded[..., :nbits] = bits
    as_bytes = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(as_bytes).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, nbits: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns a uint8 0/1 array."""
    words = np.ascontiguousarray(words, dtype="<u8")
    as_bytes = words.view(np.uint8)
    bits = np.unpackbits(as_bytes, axis=-1, bitorder="little")
    return bits[..., :nbits]


class DimensionError(ValueError):
    """Operand shapes do not agree."""


class BitVector:
    """Immutable length-``len`` vector over F2."""

    __slots__ = ("len", "words")

    def __init__(self, length: int, words: np.ndarray):
        words = np.array(words, dtype=np.uint64, copy=True).reshape(n_words(length))
        if length % WORD and words.size:
            words[-1] &= _pad_mask(length)
        words.flags.writeable = False
        self.len = int(length)
        self.words = words

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(length, np.zeros(n_words(length), dtype=np.uint64))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        return cls(arr.size, pack_bits(arr))

    @classmethod
    def from_support(cls, length: int, support: Iterable[int]) -> "BitVector":
        bits = np.zeros(length, dtype=np.uint8)
        bits[np.fromiter(support, dtype=np.int64)] = 1
        return cls(length, pack_bits(bits))

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitVector":
        return cls.from_bits(rng.integers(0, 2, size=length, dtype=np.uint8))

    def bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.len)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.bits())

    def weight(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def __len__(self) -> int:
        return self.len

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.len:
            raise IndexError(i)
        return int((self.words[i // WORD] >> np.uint64(i % WORD)) & _ONE)

    def _check(self, other: "BitVector") -> None:
        if self.len != other.len:
            raise DimensionError(f"length {self.len} vs {other.len}")

    def __xor__(self, other: "BitVector") -> "BitVector":
        self._check(other)
        return BitVector(self.len, self.words ^ other.words)

    __add__ = __xor__

    def __and__(self, other: "BitVector") -> "BitVector":
        self._check(other)
        return BitVector(self.len, self.words & other.words)

    def dot(self, other: "BitVector") -> int:
        self._check(other)
        return int(np.bitwise_count(self.words & other.words).sum()) & 1

    def concat(self, other: "BitVector") -> "BitVector":
        return BitVector.from_bits(np.concatenate([self.bits(), other.bits()]))

    def slice(self, start: int, stop: int) -> "BitVector":
        return BitVector.from_bits(self.bits()[start:stop])

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BitVector)
            and self.len == other.len
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self) -> int:
        return hash((self.len, self.words.tobytes()))

    def __repr__(self) -> str:
        s = "".join(map(str, self.bits()))
        return f"BitVector({s!r})"


def hamming_weight(v: BitVector) -> int:
    return v.weight()


class BitMatrix:
    """Immutable ``rows x cols`` matrix over F2, row-major packed."""

    __slots__ = ("rows", "cols", "words", "_bits")

    def __init__(self, rows: int, cols: int, words: np.ndarray):
        words = np.array(words, dtype=np.uint64, copy=True).reshape(rows, n_words(cols))
        if cols % WORD and words.size:
            words[:, -1] &= _pad_mask(cols)
        words.flags.writeable = False
        self.rows = int(rows)
        self.cols = int(cols)
        self.words = words
        self._bits = None

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, np.zeros((rows, n_words(cols)), dtype=np.uint64))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_bits(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_bits(cls, bits) -> "BitMatrix":
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 2:
            arr = arr.reshape(arr.shape[0] if arr.size else 0, -1)
        return cls(arr.shape[0], arr.shape[1], pack_bits(arr))

    @classmethod
    def from_rows(cls, rows: Sequence[BitVector], cols: int | None = None) -> "BitMatrix":
        if not rows:
            return cls.zeros(0, cols or 0)
        c = rows[0].len
        return cls(len(rows), c, np.stack([r.words for r in rows]))

    @classmethod
    def random(cls, rows: int, cols: int, rng: np.random.Generator) -> "BitMatrix":
        return cls.from_bits(rng.integers(0, 2, size=(rows, cols), dtype=np.uint8))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def bits(self) -> np.ndarray:
        """Unpacked 0/1 view (cached, read-only)."""
        if self._bits is None:
            b = unpack_bits(self.words, self.cols).reshape(self.rows, self.cols)
            b.flags.writeable = False
            self._bits = b
        return self._bits

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.words[i])

    def row_list(self) -> list[BitVector]:
        return [self.row(i) for i in range(self.rows)]

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_bits(self.bits().T)

    def columns(self, idx: Sequence[int]) -> "BitMatrix":
        return BitMatrix.from_bits(self.bits()[:, np.asarray(idx, dtype=np.int64)])

    def select_rows(self, idx: Sequence[int]) -> "BitMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        return BitMatrix(idx.size, self.cols, self.words[idx])

    def vstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.cols:
            raise DimensionError(f"cols {self.cols} vs {other.cols}")
        return BitMatrix(self.rows + other.rows, self.cols, np.vstack([self.words, other.words]))

    def hstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.rows != other.rows:
            raise DimensionError(f"rows {self.rows} vs {other.rows}")
        return BitMatrix.from_bits(np.hstack([self.bits(), other.bits()]))

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise DimensionError(f"{self.shape} @ {other.shape}")
        out = np.zeros((self.rows, n_words(other.cols)), dtype=np.uint64)
        a = self.bits().astype(bool)
        for j in range(self.cols):
            sel = a[:, j]
            if sel.any():
                out[sel] ^= other.words[j]
        return BitMatrix(self.rows, other.cols, out)

    def __xor__(self, other: "BitMatrix") -> "BitMatrix":
        if self.shape != other.shape:
            raise DimensionError(f"{self.shape} vs {other.shape}")
        return BitMatrix(self.rows, self.cols, self.words ^ other.words)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.shape == other.shape
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"

    def rank(self) -> int:
        return row_reduce(self)[2]


def mat_vec_mul_transposed(H: BitMatrix, e: BitVector) -> BitVector:
    """Syndrome ``H e^T`` returned as a row vector of length ``H.rows``."""
    if e.len != H.cols:
        raise DimensionError(f"vector length {e.len} vs {H.cols} columns")
    par = np.bitwise_count(H.words & e.words[None, :]).sum(axis=1) & 1
    return BitVector.from_bits(par.astype(np.uint8))


def _gauss_jordan_numpy(words: np.ndarray, order: np.ndarray, limit: int) -> list[int]:
    pivots: list[int] = []
    r = 0
    for c in order:
        if r >= limit:
            break
        wi, sh = divmod(int(c), WORD)
        col = (words[:, wi] >> np.uint64(sh)) & _ONE
        cand = np.flatnonzero(col[r:])
        if cand.size == 0:
            continue
        p = r + int(cand[0])
        if p != r:
            words[[r, p]] = words[[p, r]]
            col[[r, p]] = col[[p, r]]
        col[r] = 0
        hit = col.astype(bool)
        if hit.any():
            words[hit] ^= words[r]
        pivots.append(int(c))
        r += 1
    return pivots


try:
    import numba

    @numba.njit(cache=True, nogil=True)
    def _gauss_jordan_kernel(words, order, limit, out):  # pragma: no cover - compiled
        nrows, nw = words.shape
        r = 0
        for t in range(order.shape[0]):
            if r >= limit:
                break
            c = order[t]
            wi = c // 64
            bit = np.uint64(1) << np.uint64(c % 64)
            p = -1
            for i in range(r, nrows):
                if words[i, wi] & bit:
                    p = i
                    break
            if p < 0:
                continue
            if p != r:
                for j in range(nw):
                    tmp = words[r, j]
                    words[r, j] = words[p, j]
                    words[p, j] = tmp
            for i in range(nrows):
                if i != r and (words[i, wi] & bit):
                    for j in range(nw):
                        words[i, j] ^= words[r, j]
            out[r] = c
            r += 1
        return r

except ImportError:  # pragma: no cover - exercised only without numba
    _gauss_jordan_kernel = None


def gauss_jordan(words: np.ndarray, col_order: Iterable[int], max_rank: int | None = None) -> list[int]:
    """In-place Gauss-Jordan elimination on packed rows.

    Columns are tried in ``col_order``; each column that has a nonzero entry at
    or below the current rank becomes a pivot and is cleared in every other
    row.  Returns the pivot columns in row order.
    """
    nrows = words.shape[0]
    limit = nrows if max_rank is None else min(nrows, max_rank)
    order = np.fromiter(col_order, dtype=np.int64)
    if _gauss_jordan_kernel is None or not words.flags.c_contiguous or words.dtype != np.uint64:
        return _gauss_jordan_numpy(words, order, limit)
    out = np.empty(max(limit, 1), dtype=np.int64)
    r = _gauss_jordan_kernel(words, order, limit, out)
    return [int(c) for c in out[:r]]


def row_reduce(
    M: BitMatrix, pivot_columns_hint: Sequence[int] | None = None
) -> tuple[BitMatrix, list[int], int, BitMatrix]:
    """Reduced row-echelon form with the transform that produces it.

    Returns ``(reduced, pivots, rank, transform)`` with
    ``transform @ M == reduced`` and ``transform`` invertible.  Hinted
    columns are tried first, in order, then the remaining ones.
    """
    wm = n_words(M.cols)
    aug = np.hstack([M.words, pack_bits(np.eye(M.rows, dtype=np.uint8))])
    if pivot_columns_hint is None:
        order: list[int] = list(range(M.cols))
    else:
        hint = [int(c) for c in pivot_columns_hint]
        seen = set(hint)
        order = hint + [c for c in range(M.cols) if c not in seen]
    pivots = gauss_jordan(aug, order)
    reduced = BitMatrix(M.rows, M.cols, aug[:, :wm])
    transform = BitMatrix(M.rows, M.rows, aug[:, wm:])
    return reduced, pivots, len(pivots), transform


def rank(M: BitMatrix) -> int:
    w = M.words.copy()
    return len(gauss_jordan(w, range(M.cols)))


def kernel_basis(M: BitMatrix) -> BitMatrix:
    """Basis of ``{x : M x^T = 0}`` as the rows of a matrix."""
    w = M.words.copy()
    pivots = gauss_jordan(w, range(M.cols))
    R = unpack_bits(w[: len(pivots)], M.cols).reshape(len(pivots), M.cols)
    free = [c for c in range(M.cols) if c not in set(pivots)]
    basis = np.zeros((len(free), M.cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        # pivot variable in row j equals the sum of its free entries
        basis[i, pivots] = R[:, f]
    return BitMatrix.from_bits(basis.reshape(len(free), M.cols))


def solve(A: BitMatrix, b: BitVector) -> BitVector | None:
    """One solution ``x`` of ``A x^T = b^T``, or None if inconsistent."""
    if b.len != A.rows:
        raise DimensionError(f"rhs length {b.len} vs {A.rows} rows")
    wa = n_words(A.cols)
    aug = np.hstack([A.words, pack_bits(b.bits()[:, None])])
    pivots = gauss_jordan(aug, range(A.cols))
    rhs = (aug[:, wa] & _ONE).astype(np.uint8)
    if rhs[len(pivots):].any():
        return None
    x = np.zeros(A.cols, dtype=np.uint8)
    x[pivots] = rhs[: len(pivots)]
    return BitVector.from_bits(x)


def random_invertible(n: int, rng: np.random.Generator, *, return_attempts: bool = False):
    """Uniform invertible ``n x n`` matrix by rejection sampling."""
    if n < 1:
        raise ValueError("n must be at least 1")
    attempts = 0
    while True:
        attempts += 1
        M = BitMatrix.random(n, n, rng)
        if rank(M) == n:
            return (M, attempts) if return_attempts else M


def random_full_rank(rows: int, cols: int, rng: np.random.Generator) -> BitMatrix:
    """Uniform full-row-rank ``rows x cols`` matrix (``rows <= cols``)."""
    if rows > cols:
        raise DimensionError("full row rank needs rows <= cols")
    while True:
        M = BitMatrix.random(rows, cols, rng)
        if rank(M) == rows:
            return M


@dataclass(frozen=True)
class Permutation:
    """Coordinate permutation acting by ``apply(v)[i] = v[images[i]]``."""

    images: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.images) != list(range(len(self.images))):
            raise ValueError("images is not a bijection")

    @property
    def n(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    def array(self) -> np.ndarray:
        return np.asarray(self.images, dtype=np.int64)

    def inverse(self) -> "Permutation":
        return Permutation(tuple(int(i) for i in np.argsort(self.array())))

    def compose(self, other: "Permutation") -> "Permutation":
        """Permutation equal to applying ``other`` then ``self``."""
        return Permutation(tuple(int(i) for i in other.array()[self.array()]))

    def apply(self, v: BitVector) -> BitVector:
        if v.len != self.n:
            raise DimensionError(f"vector length {v.len} vs permutation {self.n}")
        return BitVector.from_bits(v.bits()[self.array()])

    def apply_columns(self, M: BitMatrix) -> BitMatrix:
        """Column action matching :meth:`apply`, so ``(M P)(v P)^T = M v^T``."""
        if M.cols != self.n:
            raise DimensionError(f"matrix cols {M.cols} vs permutation {self.n}")
        return BitMatrix.from_bits(M.bits()[:, self.array()])


def apply(pi: Permutation, v: BitVector) -> BitVector:
    return pi.apply(v)


def inverse(pi: Permutation) -> Permutation:
    return pi.inverse()


def random_permutation(n: int, rng: np.random.Generator) -> Permutation:
    """Fisher-Yates shuffle driven by ``rng``."""
    a = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        a[i], a[j] = a[j], a[i]
    return Permutation(tuple(a))
