"""
Why rejection sampling matters
==============================

Without rejection, the (U, U+V) decoder always outputs the same number of
disagreeing coordinate pairs and its errors cluster on matched pairs.  With
rejection sampling the number of disagreeing pairs follows the law of a
uniform weight-w vector and the pair statistic looks like noise.
"""

from surfsig.cli import distcheck_report

report = distcheck_report(n=200, k_U=62, k_V=38, w=38, samples=3000, seed=5)
for name, r in report.items():
    print(
        f"{name}: weight {r['weight']}, w1 chi-square p={r['w1_p_value']:.3g}, "
        f"pair rate {r['pair_rate_matched']:.5f} vs {r['pair_rate_unmatched']:.5f} "
        f"(z={r['pair_z']:.1f})"
    )

# v1 fails both checks by construction; v2 should pass both.
assert report["v1"]["pair_p_value"] < 1e-3
print("v2 passes:", bool(report["v2"]["w1_p_value"] > 1e-3 and report["v2"]["pair_p_value"] > 1e-3))
