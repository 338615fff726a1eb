"""The cross-mass margin for J = C_p exp(-lambda |z|^p) on (-L, L).

For p <= 1 the margin is positive for every L and lambda.  For p > 1 it
depends only on eta = L lambda^(1/p) and changes sign once, at eta_0.
"""

import numpy as np

from nonlocal_gap import gap

grid = np.geomspace(0.1, 10.0, 5)
for p in (0.5, 1.0):
    deltas = [gap.example_exp_delta(p, lam, L).delta for L in grid for lam in grid]
    print(f"p={p}: min Delta over the 5x5 grid = {min(deltas):.3e}")

eta0 = gap.example_exp_threshold(2.0, 1.0)
print(f"\np=2: eta_0 = {eta0:.12f}")
for eta in (0.25 * eta0, 0.5 * eta0, eta0, 2 * eta0, 4 * eta0):
    print(f"  eta={eta:.4f}  Delta={gap.delta_of_eta(2.0, 1.0, eta):+.3e}")

# eta_0 does not depend on lambda: rescaling a config just moves L.
for lam in (0.5, 2.0):
    print(f"  lambda={lam}: eta_0 = {gap.example_exp_threshold(2.0, lam):.12f}")
