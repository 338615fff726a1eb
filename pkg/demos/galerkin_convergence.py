"""Galerkin eigenpairs on nested polynomial spaces.

The spaces are nested, so each eigenvalue can only rise with N.  The
residual ||L v - beta v|| measures how far each approximate pair is from
a true one; it shrinks as long as the eigenvalue stays above the band.
"""

import numpy as np

from nonlocal_gap import Domain, galerkin, gaussian

kern = gaussian(8.0, 2)
l_shape = Domain.from_boxes([[0.0, 0.0, 2.0, 1.0], [0.0, 1.0, 1.0, 2.0]])
table = galerkin.converge(kern, l_shape, [4, 8, 16], 3)

print(f"sup sigma_c = {table.sup_sigma_c:.10f}")
print(" N  k          beta       residual      margin")
for r in table.rows:
    print(f"{r.N:2d} {r.k:2d}  {r.beta:+.10f}  {r.residual:.3e}  {r.margin:+.6f}")
print(f"monotone: {table.monotone}")

# The leading non-trivial eigenfunction changes sign between the two arms.
v1 = table.pairs[16][1]
tips = np.array([[2.0, 0.0], [1.0, 1.0], [0.0, 2.0]])
for x, y in zip(tips, v1(tips)):
    print(f"  v1({x[0]:.1f}, {x[1]:.1f}) = {y:+.6f}")
