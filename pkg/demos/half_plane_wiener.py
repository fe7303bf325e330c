"""Wiener profiles at the origin for four sets in the plane.

The half-plane occupies a fixed fraction of every ball around the origin,
so its capacity density is the same at every scale and the dyadic sum
grows linearly: thick.  A disc away from the origin stops contributing
once the balls are smaller than its distance: thin.  The full plane gives
density 1 and the empty set 0.
"""

from varcap.grid import ball_mask, build_grid, empty_mask, full_mask, halfspace_mask, sample_exponent
from varcap.thinness import CondenserCache, classify_thinness

g = build_grid(2, (-2.0, -2.0), (4.0, 4.0), 257)
p = sample_exponent(2.0, g)
cache = CondenserCache(p)
sets = {
    "empty": empty_mask(g),
    "full": full_mask(g),
    "half-plane": halfspace_mask(g, (0, 0), (1, 0)),
    "far disc": ball_mask(g, (0.6, 0.0), 0.3),
}
for name, A in sets.items():
    prof = classify_thinness(A, (0.0, 0.0), p, i_max=4, cache=cache)
    ratios = " ".join(f"{r:.3f}" for r in prof.ratios)
    print(f"{name:>10}: ratios {ratios}")
    print(f"{'':>10}  W_sum {prof.wiener_sum:.4f}  W {prof.integral_estimate:.4f}  "
          f"verdict {prof.verdict} (sum: {prof.sum_verdict}, integral: {prof.integral_verdict})")
print(f"\n{len(cache)} condenser solves shared through the cache")
