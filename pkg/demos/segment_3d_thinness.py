"""A straight segment ending at the origin of R^3, p = 2.

A segment has dimension 1 = n - 2, so its 2-capacity in R^3 vanishes and
it is thin at every point.  On the lattice the segment is a tube one cell
thick, whose condenser capacity at scale r behaves like r / log(r / h):
the density ratio decays only logarithmically over the few scales a
grid resolves.  With 65^3 nodes on [-2, 2]^3 there are four dyadic
scales, fewer than the five-scale window of the tail verdict, so the
script records what the solver reports rather than asserting an answer.
"""

import time

from varcap.grid import build_grid, sample_exponent, segment_mask
from varcap.thinness import CondenserCache, classify_thinness, max_scale

g = build_grid(3, (-2.0, -2.0, -2.0), (4.0, 4.0, 4.0), 65)
p = sample_exponent(2.0, g)
A = segment_mask(g, (g.h, 0.0, 0.0), (0.5, 0.0, 0.0))
print(f"h = {g.h}, {A.count} nodes on the segment, deepest scale {max_scale(g)}")
t0 = time.perf_counter()
prof = classify_thinness(A, (0.0, 0.0, 0.0), p, i_max=max_scale(g), cache=CondenserCache(p))
print(f"ratios      {' '.join(f'{r:.4f}' for r in prof.ratios)}")
print(f"increments  {' '.join(f'{r:.4f}' for r in prof.increments)}")
print(prof.verdict_record())
print(f"{time.perf_counter() - t0:.0f}s")
