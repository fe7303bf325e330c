"""Ring condenser in the plane, refined three times.

The plate is the disc of radius 1/4, the domain the disc of radius 1/2,
p = 2 and unit weight.  The minimiser is log(2r/|x|)/log 2 and the
capacity 2 pi / log 2.  Discs are staircased on the lattice, so the error
shrinks roughly like h; the table shows both the error against the
closed form and the Richardson order built from successive values only.
"""

import math
import time

from varcap.capacity import relative_capacity
from varcap.cli import study_table
from varcap.grid import ball_mask, build_grid, sample_exponent

exact = 2 * math.pi / math.log(2)
vals = []
for n in (65, 129, 257):
    g = build_grid(2, (-0.5, -0.5), (1.0, 1.0), n)
    p = sample_exponent(2.0, g)
    t0 = time.perf_counter()
    res = relative_capacity(ball_mask(g, (0, 0), 0.25), ball_mask(g, (0, 0), 0.5, closed=False), p)
    print(f"{n:4d}^2 nodes: cap = {res.value:.5f}  ({res.iterations} iterations, "
          f"{time.perf_counter() - t0:.1f}s)")
    vals.append((g.h, res.value, res.converged))

print(f"\nclosed form {exact:.5f}")
print(f"{'h':>9} {'value':>9} {'error':>9} {'order':>7} {'richardson':>10}")
for h, v, err, o_ref, o_rich, _ in study_table(vals, exact):
    print(f"{h:9.5f} {v:9.5f} {err:9.5f} {o_ref:7.3f} {o_rich:10.3f}")

# the minimiser against the radial profile along the x axis
g = build_grid(2, (-0.5, -0.5), (1.0, 1.0), 129)
res = relative_capacity(ball_mask(g, (0, 0), 0.25), ball_mask(g, (0, 0), 0.5, closed=False),
                        sample_exponent(2.0, g))
row = res.minimizer.values[:, 64]
x = g.axis_coords(0)
print("\n   x     field   log(0.5/x)/log2")
for i in range(96, 129, 4):
    r = abs(x[i])
    ref = min(1.0, max(0.0, math.log(0.5 / r) / math.log(2))) if r > 0 else 1.0
    print(f"{x[i]:6.3f}  {row[i]:7.4f}  {ref:7.4f}")
