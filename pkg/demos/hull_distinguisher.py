"""
Telling a public key from a random code
=======================================

A permuted (U, U+V) code with k_U > k_V has a large hull: the (u, u) words
with u in the dual of V are orthogonal to the whole code.  A random code of
the same size has a hull of dimension close to zero.
"""

import numpy as np

from surfsig.attack import hull_distinguish, recover_matched_pairs
from surfsig.codes import LinearCode, random_uuv
from surfsig.f2linalg import random_permutation

rng = np.random.default_rng(7)
n, k_U, k_V = 120, 40, 20

code = random_uuv(n, k_U, k_V, rng)
P = random_permutation(n, rng)
public = LinearCode(P.apply_columns(code.H_sec))
random = LinearCode.random(n, k_U + k_V, rng)

for name, C in [("permuted (U,U+V)", public), ("random", random)]:
    v = hull_distinguish(C, k_U, k_V)
    print(f"{name:18s} hull dim {v.hull_dim:3d} -> {v.predicted}")

# Hull words are constant on matched coordinate pairs, which exposes part
# of the permutation.
pairs = recover_matched_pairs(public)
print(f"recovered {len(pairs.pairs)} of {n // 2} matched pairs")
a, b = pairs.pairs[0]
print("first pair, in secret coordinates:", P.images[a], P.images[b])
