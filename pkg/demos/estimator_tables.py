"""
Security estimates at full scale
================================

Nothing here runs an attack.  The numbers come from closed-form costs:
the multi-target ISD exponent, the key-recovery searches on the V and U
parts, and the bound on how far public syndromes are from uniform.
"""

from surfsig.estimator import asymptotic_exponents, expected_eliminations, gv_bound
from surfsig.surf import REFERENCE_LENGTHS, parameter_row, select_params

print("d_GV(1000, 500) =", gv_bound(1000, 500))

# Normalized ISD exponents at rate 1/2.
for ratio in (0.11, 0.15, 0.19):
    e = asymptotic_exponents(ratio)
    print(f"w/n={ratio}: log2 M/n {e['log2M/n']:.4f}  WF_q/n {e['WFq/n']:.4f}  WF/n {e['WF/n']:.4f}")

# The three reference parameter sets.  The key-attack search box is
# p <= 10, l <= 60; pass grid="wide" for a larger (slower) search.
for lam in sorted(REFERENCE_LENGTHS):
    row = parameter_row(lam)
    print(
        f"lam={lam:3d} n={row['n']:5d} w={row['w']:4d} "
        f"pk={row['public_key_MB']:.3f} MB sk={row['secret_key_MB']:.3f} MB "
        f"WF=2^{row['log2_WF']:.1f} C_V=2^{row['log2_C_V']:.1f} C_U=2^{row['log2_C_U']:.1f} "
        f"q*sqrt(eps)=2^{row['log2_qhash_sqrt_eps']:.1f}"
    )
    cost = expected_eliminations(select_params(row["n"], lam))
    print(f"         about {cost['total']:.1f} eliminations per signature")
