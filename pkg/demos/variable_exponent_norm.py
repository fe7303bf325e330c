"""Modular and Luxemburg norm under a variable exponent.

For a constant exponent the norm is the modular to the power 1/p.  With
an exponent bump between 1.5 and 4 there is no such identity; the norm
sits between rho**(1/p+) and rho**(1/p-), and which end it hugs depends
on whether the field is large or small.
"""

import numpy as np

from varcap.grid import BumpExponent, build_grid, full_mask, sample_exponent, weighted_measure
from varcap.modular import luxemburg_norm, modular

g = build_grid(2, (0.0, 0.0), (1.0, 1.0), 129)
print(f"measure of the unit square: {weighted_measure(full_mask(g)):.15f}")
p = sample_exponent(BumpExponent(1.5, 4.0, (0.5, 0.5), 0.3), g)
print(f"p- = {p.p_minus:.3f}, p+ = {p.p_plus:.3f}, log-Holder constant {p.log_holder_C:.3f}\n")

x, y = g.mesh
shape = np.exp(-((x - 0.5) ** 2 + (y - 0.5) ** 2) / 0.05)
print(" scale        rho        norm   rho^(1/p+)  rho^(1/p-)")
for s in (1e-2, 0.3, 1.0, 3.0, 1e2):
    f = s * shape
    rho = modular(f, p)
    n = luxemburg_norm(f, p)
    print(f"{s:6g}  {rho:10.4e}  {n:10.4e}  {rho ** (1 / p.p_plus):10.4e}  "
          f"{rho ** (1 / p.p_minus):10.4e}")

print("\nconstant fields on the unit square have norm equal to the constant:")
for c in (0.01, 0.5, 2.0, 50.0):
    print(f"  c = {c:6g}: norm = {luxemburg_norm(np.full(g.shape, c), p):.12f}")
