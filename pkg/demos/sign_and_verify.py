"""
Signing and verifying at desk size
==================================

Generate a key pair at ``n = 200``, sign a few messages, and watch a single
flipped bit break verification.
"""

import numpy as np

from surfsig import keygen, sign, verify
from surfsig.decoder import build_rejection_table
from surfsig.f2linalg import BitVector
from surfsig.surf import SignStats, SurfParams

# A toy parameter set: half length 100, U of dimension 62, V of dimension 38.
params = SurfParams(n=200, k_U=62, k_V=38, w=38, lam=16)
rng = np.random.default_rng(2024)
sk, pk = keygen(params, rng)
print(params)
print("public key bits:", params.public_key_bits())

# The rejection table only depends on (n, k_V, w); build it once.
table = build_rejection_table(params)
print(f"expected V-stage decodes per signature: {table.M_rs:.2f}")

stats = SignStats()
for msg in [b"hello", b"goodbye", b"x" * 1000]:
    sig = sign(sk, msg, table, rng, stats=stats)
    print(msg[:10], "weight", sig.e.weight(), "valid", verify(pk, msg, sig))

print("salts used:", stats.attempts, "eliminations:", stats.decode.eliminations)

# Flip one coordinate of the error vector: the weight changes, so it fails.
bad = type(sig)(sig.e ^ BitVector.from_support(params.n, [0]), sig.r)
print("tampered valid:", verify(pk, b"x" * 1000, bad))
