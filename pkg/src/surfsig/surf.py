"""Hash-and-sign over permuted (U, U+V) codes.

The secret key is ``(H_U, H_V, P)``; the public key is the systematic form
``(I | R)`` of ``H_sec P``.  The systematizing transform plays the role of the
scrambler ``S``, so ``S^{-1} s^T = H_sec P (s, 0)^T`` and ``S`` is never stored.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .codes import UUVCode, build_uuv
from .decoder import (
    DecodeStats,
    IterationBudgetExceeded,
    RejectionTable,
    build_rejection_table,
    uuv_decode_v2_bits,
)
from .f2linalg import (
    BitMatrix,
    BitVector,
    Permutation,
    gauss_jordan,
    mat_vec_mul_transposed,
    n_words,
    pack_bits,
    random_full_rank,
    random_permutation,
)

DOMAIN_TAG = 0x53
HASH_SHAKE256 = 1
SIGN_ATTEMPTS = 16


@dataclass(frozen=True)
class SurfParams:
    """``(n, k_U, k_V, w, lam)``; the salt is ``lam0 = 3 lam`` bits."""

    n: int
    k_U: int
    k_V: int
    w: int
    lam: int

    def __post_init__(self):
        if self.n % 2:
            raise ValueError("n must be even")
        if not (0 <= self.k_U <= self.n // 2 and 0 <= self.k_V <= self.n // 2):
            raise ValueError("k_U and k_V must lie in [0, n/2]")
        if 2 * self.k_U - self.k_V > self.n // 2:
            raise ValueError("need 2 k_U - k_V <= n/2")
        if not 0 < self.w <= self.n:
            raise ValueError("w must lie in (0, n]")

    @property
    def k(self) -> int:
        return self.k_U + self.k_V

    @property
    def r(self) -> int:
        return self.n - self.k

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def lam0(self) -> int:
        return 3 * self.lam

    @property
    def salt_bytes(self) -> int:
        return (self.lam0 + 7) // 8

    def public_key_bits(self) -> int:
        return self.k * (self.n - self.k)

    def secret_key_bits(self) -> float:
        h = self.n // 2
        return self.n * math.log2(self.n) + self.k_U * (h - self.k_U) + self.k_V * (h - self.k_V)

    def signature_bits(self) -> int:
        return self.n + self.lam0


def recipe_weight(n: int, rate: float = 0.5) -> int:
    """``floor(n (3 - sqrt(1 + 8R)) / 4)``."""
    return math.floor(n * (3 - math.sqrt(1 + 8 * rate)) / 4)


def select_params(n: int, lam: int, recipe: str = "balanced") -> SurfParams:
    """Rate-1/2 parameters for length ``n``.

    ``balanced`` takes ``k_V = w`` and ``k_U = n/2 - w`` so that ``k = n/2``.
    ``rejection`` keeps ``k_U = n/2 - w`` but sets
    ``k_V = floor(n/2 - 2w(1 - w/n))``, centring the Prange law on the
    expected ``w_1``; ``k`` then drifts from ``n/2`` by a few units.
    """
    if n % 2 or n < 64:
        raise ValueError("n must be even and at least 64")
    w = recipe_weight(n)
    k_U = n // 2 - w
    if recipe == "balanced":
        k_V = w
    elif recipe == "rejection":
        k_V = math.floor(n / 2 - 2 * w * (1 - w / n))
    else:
        raise ValueError(f"unknown recipe {recipe!r}")
    return SurfParams(n=n, k_U=k_U, k_V=k_V, w=w, lam=lam)


# ---------------------------------------------------------------- keys


@dataclass(frozen=True)
class SecretKey:
    H_U: BitMatrix
    H_V: BitMatrix
    P: Permutation
    params: SurfParams

    @cached_property
    def uuv(self) -> UUVCode:
        return build_uuv(self.H_U, self.H_V)

    @cached_property
    def H_perm(self) -> BitMatrix:
        """``H_sec P``, the matrix whose systematic form is public."""
        return self.P.apply_columns(self.uuv.H_sec)


@dataclass(frozen=True)
class PublicKey:
    R: BitMatrix  # (n-k) x k block to the right of the identity
    params: SurfParams

    @cached_property
    def H_pub(self) -> BitMatrix:
        r = self.params.r
        eye = np.eye(r, dtype=np.uint8)
        return BitMatrix.from_bits(np.hstack([eye, self.R.bits()]).reshape(r, self.params.n))


def systematize(H: BitMatrix) -> tuple[BitMatrix, BitMatrix] | None:
    """``(T H, T)`` with ``T H = (I | R)``, or ``None`` if the left block is singular."""
    r = H.rows
    aug = np.hstack([H.words, pack_bits(np.eye(r, dtype=np.uint8))])
    piv = gauss_jordan(aug, range(r))
    if len(piv) < r:
        return None
    wm = n_words(H.cols)
    return BitMatrix(r, H.cols, aug[:, :wm]), BitMatrix(r, r, aug[:, wm:])


def keygen(params: SurfParams, rng: np.random.Generator, *, on_singular: str = "rekey") -> tuple[SecretKey, PublicKey]:
    """Sample ``H_U``, ``H_V`` full rank and a permutation; publish ``(I | R)``.

    When the left ``(n-k)`` block of ``H_sec P`` is singular, ``rekey`` draws
    everything again; ``repermute`` keeps ``H_U, H_V`` and draws a new ``P``.
    """
    if on_singular not in ("rekey", "repermute"):
        raise ValueError(f"unknown on_singular policy {on_singular!r}")
    h = params.n // 2
    H_U = random_full_rank(h - params.k_U, h, rng)
    H_V = random_full_rank(h - params.k_V, h, rng)
    while True:
        P = random_permutation(params.n, rng)
        sk = SecretKey(H_U=H_U, H_V=H_V, P=P, params=params)
        out = systematize(sk.H_perm)
        if out is not None:
            H_pub, _ = out
            R = BitMatrix.from_bits(H_pub.bits()[:, params.r :])
            return sk, PublicKey(R=R, params=params)
        if on_singular == "rekey":
            H_U = random_full_rank(h - params.k_U, h, rng)
            H_V = random_full_rank(h - params.k_V, h, rng)


def materialize_S(sk: SecretKey) -> BitMatrix:
    """Debug helper: the ``S`` with ``H_pub = S H_sec P``."""
    out = systematize(sk.H_perm)
    if out is None:
        raise ValueError("secret key has a singular left block")
    return out[1]


# ---------------------------------------------------------------- hashing


def hash_to_syndrome(msg: bytes, r: bytes, n_minus_k: int) -> BitVector:
    """SHAKE256 over ``0x53 || r || msg``, cut to ``n - k`` bits (LSB-first)."""
    nbytes = (n_minus_k + 7) // 8
    digest = hashlib.shake_256(bytes([DOMAIN_TAG]) + bytes(r) + bytes(msg)).digest(nbytes)
    bits = np.unpackbits(np.frombuffer(digest, dtype=np.uint8), bitorder="little")[:n_minus_k]
    return BitVector.from_bits(bits)


# ---------------------------------------------------------------- sign / verify


@dataclass(frozen=True)
class Signature:
    e: BitVector
    r: bytes


@dataclass
class SignStats:
    attempts: int = 0
    decode: DecodeStats = field(default_factory=DecodeStats)


def signing_syndrome(sk: SecretKey, s: BitVector) -> BitVector:
    """``S^{-1} s^T = H_sec P (s, 0)^T``."""
    padded = s.concat(BitVector.zeros(sk.params.k))
    return mat_vec_mul_transposed(sk.H_perm, padded)


def sign(
    sk: SecretKey,
    msg: bytes,
    table: RejectionTable | None,
    rng: np.random.Generator,
    *,
    stats: SignStats | None = None,
    return_secret_error: bool = False,
):
    """Sign ``msg``; retries with a fresh salt at most 16 times on decoder exhaustion."""
    p = sk.params
    if table is None:
        table = build_rejection_table(p)
    if table.n != p.n or table.k_V != p.k_V or table.w != p.w:
        raise ValueError("rejection table does not match the key")
    h = p.n // 2
    for _ in range(SIGN_ATTEMPTS):
        if stats is not None:
            stats.attempts += 1
        r = rng.bytes(p.salt_bytes)
        s = hash_to_syndrome(msg, r, p.r)
        sigma = signing_syndrome(sk, s).bits()
        s1 = BitVector.from_bits(sigma[: h - p.k_U])
        s2 = BitVector.from_bits(sigma[h - p.k_U :])
        try:
            e = uuv_decode_v2_bits(sk.uuv, s1, s2, table, rng, stats=stats.decode if stats else None)
        except IterationBudgetExceeded:
            continue
        e_sec = BitVector.from_bits(e)
        sig = Signature(e=sk.P.apply(e_sec), r=r)
        return (sig, e_sec) if return_secret_error else sig
    raise IterationBudgetExceeded(f"signing failed after {SIGN_ATTEMPTS} salts")


def verify(pk: PublicKey, msg: bytes, sig: Signature) -> bool:
    """Accept iff ``|e| = w`` and ``H_pub e^T = h(msg, r)``."""
    p = pk.params
    try:
        if sig.e.len != p.n or len(sig.r) != p.salt_bytes:
            return False
        if sig.e.weight() != p.w:
            return False
        return mat_vec_mul_transposed(pk.H_pub, sig.e) == hash_to_syndrome(msg, sig.r, p.r)
    except (TypeError, ValueError, AttributeError):
        return False


# ---------------------------------------------------------------- parameter report

REFERENCE_LENGTHS = {80: 4800, 128: 7700, 256: 15400}
WIDE_P = range(1, 61)
WIDE_L = range(1, 401)


def reference_workfactor(params: SurfParams) -> float:
    """``log2 WF`` of the DOOM-Dumer attack as ``n`` times the asymptotic exponent at ``w/n``."""
    from .estimator import asymptotic_exponents

    return params.n * asymptotic_exponents(params.w / params.n, rate=params.rate)["WFq/n"]


def parameter_row(lam: int, n: int | None = None, *, grid: str = "base") -> dict:
    """All parameter-table quantities for security level ``lam``.

    ``grid="base"`` minimizes the key-attack costs over ``p <= 10``,
    ``l <= 60``; ``grid="wide"`` over ``p <= 60``, ``l <= 400`` (about a
    minute per set at the larger lengths).
    """
    from .attack import BASE_L, BASE_P, structural_attack_cost
    from .estimator import doom_workfactor, log2_qhash_sqrt_eps

    if n is None:
        n = REFERENCE_LENGTHS[lam]
    p = select_params(n, lam)
    if grid == "base":
        pr, lr = BASE_P, BASE_L
    elif grid == "wide":
        pr, lr = WIDE_P, WIDE_L
    else:
        raise ValueError(f"unknown grid {grid!r}")
    cost = structural_attack_cost(p.n, p.k, p.k_U, p.k_V, pr, lr)
    concrete = doom_workfactor(p.n, p.k, p.w)
    return {
        "lambda": lam,
        "n": p.n,
        "k_U": p.k_U,
        "k_V": p.k_V,
        "w": p.w,
        "signature_bits": p.signature_bits(),
        "public_key_MB": p.public_key_bits() / 8e6,
        "secret_key_MB": p.secret_key_bits() / 8e6,
        "log2_qhash_sqrt_eps": log2_qhash_sqrt_eps(p, lam),
        "log2_C_V": cost.C_V,
        "log2_C_U": cost.C_U,
        "argmin_V": list(cost.arg_V),
        "argmin_U": list(cost.arg_U),
        "log2_WF": reference_workfactor(p),
        "log2_WF_concrete": concrete.wf_log2,
        "grid": grid,
    }
