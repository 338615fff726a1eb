"""Where the continuous spectrum ends, and how it moves as the domain grows.

The essential spectrum of the Neumann operator is {-b(x)}, the negated
retained mass.  Points near a face or a corner keep less mass, so they set
the band edge sup sigma_c = -min b.
"""

import numpy as np

from nonlocal_gap import Domain, band, gaussian, tent

# A tent on a long interval: at an endpoint exactly half of the mass is kept.
interval = Domain.interval(-1.0, 1.0)
spec = band.continuous_spectrum(tent(0.5), interval)
print(f"tent on (-1, 1): sup sigma_c = {spec.sup_sigma_c:+.15f} at x = {spec.argmin_b}")

# In 2-D the reentrant corner of an L-shape keeps three quarters of the disk,
# but the convex corners keep only a quarter, so those set the edge.
l_shape = Domain.from_boxes([[0.0, 0.0, 2.0, 1.0], [0.0, 1.0, 1.0, 2.0]])
spec = band.continuous_spectrum(tent(0.5, 2), l_shape)
print(f"tent on the L-shape: sup sigma_c = {spec.sup_sigma_c:+.15f} at x = {spec.argmin_b}")
for corner in ([1.0, 1.0], [0.0, 0.0], [0.5, 1.0]):
    print(f"  b{tuple(corner)} = {band.retained_mass(tent(0.5, 2), l_shape, np.array(corner)):.15f}")

# Growing the domain pushes min b up to the half-space value 1/2 in 1-D.
scales = [1, 2, 4, 8, 16, 32, 64]
table = band.retained_mass_scaling_study(gaussian(1.0), Domain.interval(-0.5, 0.5), scales)
print("\nscale   min b")
for s, v in table:
    print(f"{s:5.0f}   {v:.12f}")
