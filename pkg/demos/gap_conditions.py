"""Checking the sufficient conditions for an eigenvalue above the band.

Each check compares an energy bound for a test function (the cross mass
of an equal split, the variance of a linear function, or a Lipschitz
bound on the k-th eigenfunction) with min b.  When it holds, the leading
non-trivial eigenvalue is isolated.
"""

from nonlocal_gap import Domain, gap, gaussian, generalized_exponential, tent

cases = {
    "exponential p=1 on (-1, 1)": (generalized_exponential(1.0, 1.0), Domain.interval(-1.0, 1.0)),
    "narrow tent on (-1, 1)": (tent(0.1), Domain.interval(-1.0, 1.0)),
    "wide Gaussian on (-0.05, 0.05)": (gaussian(1.0), Domain.interval(-0.05, 0.05)),
    "Gaussian on the unit square": (gaussian(16.0, 2), Domain.box([0.0, 0.0], [1.0, 1.0])),
}

for name, (kern, dom) in cases.items():
    print(name)
    for r in gap.check_all(kern, dom):
        flag = "holds " if r.holds else "fails "
        print(f"  {r.condition:<16} {flag} lhs={r.lhs:.6f}  min b={r.rhs:.6f}  ({r.witness})")

# The linear-test-function bound decays like the inverse square of the scale.
print("\nlinear bound under scaling, Gaussian(8) on (-1, 1)")
base = Domain.interval(-1.0, 1.0)
for s in (1.0, 2.0, 4.0):
    lb = gap.linear_testfunction_bound(gaussian(8.0), base.scaled(s))
    print(f"  scale {s:3.0f}: bound={lb.bound:+.10f}  energy={lb.energy:+.10f}  bound*s^2={lb.bound * s * s:+.10f}")
