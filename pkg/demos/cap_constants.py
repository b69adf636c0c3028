"""Cap constants and the discrete equality case.

Spherical caps meeting the plane at angle theta are the stationary shapes of
the flow. This script prints their closed-form quermassintegrals, checks them
against the midpoint quadrature on a half-sphere grid, and shows the discrete
Minkowski deficit of a cap shrinking at second order under refinement.

    python demos/cap_constants.py
"""
import math

import numpy as np

from capflow import CapSpec, GridSpec, RadialField, build_grid, cap_constants, cap_radial, integrate

# Closed forms first. At 120 degrees V1 = 27 pi / 8 and |dS| = pi sqrt(3).
for deg in (30, 60, 90, 120, 150):
    c = cap_constants(CapSpec(math.radians(deg)), "closed")
    print(f"theta={deg:3d}  b={c.b_theta:.10f}  V1={c.V1:.10f}  V2={c.V2:.10f}  "
          f"total_H={c.total_H:.10f}  |dS|={c.contact_length:.10f}")

# Now discretise the same caps and watch the deficit fall by four per halving.
print("\nnormalised deficit of the discrete cap")
print(f"{'theta':>6}" + "".join(f"{nb:>12d}" for nb in (64, 128, 256, 512)))
for deg in (30, 60, 90, 120, 150):
    theta = math.radians(deg)
    row = []
    for nb in (64, 128, 256, 512):
        grid = build_grid(GridSpec(n_beta=nb))
        cap = RadialField(grid, np.log(cap_radial(CapSpec(theta), grid.beta)))
        row.append(integrate(cap, theta).deficit_norm)
    print(f"{deg:>6d}" + "".join(f"{d:>12.3e}" for d in row))
