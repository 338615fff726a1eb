"""Sufficient conditions for a spectral gap above the continuous spectrum.

Each check compares a test-function energy bound with ``min b`` and, when
the bound is larger than ``sup sigma_c = -min b``, certifies
``beta_1 > sup sigma_c``.

* cross mass: piecewise-constant test function on an equal-measure split,
  energy ``-(4/|Omega|) iint_{Omega_1 x Omega_2} J``;
* variance: linear test function along the axis of largest inertia,
  energy bounded by ``-m_2 / (2 I_max(Omega_0) |Omega|^{2/n})``;
* Lipschitz-k: a ``(k+1)``-dimensional polynomial space on the unit-measure
  domain with a sampled Lipschitz constant.

The generalized-exponential example on ``(-L, L)`` has its own reduced
formula for the cross-mass margin ``Delta``, which depends on ``L`` and
``lambda`` only through ``eta = L lambda^{1/p}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import band as _band
from . import galerkin, quadrature
from .domain import Domain, overlap_measure
from .exceptions import BracketError, EvaluationError, InvalidInputError
from .kernel import generalized_exponential

LIPSCHITZ_INFLATION = 1.1
DELTA_TOL = 1e-8
ETA_BRACKET = (0.01, 100.0)


@dataclass(frozen=True)
class GapReport:
    """Outcome of one sufficient condition.

    Attributes
    ----------
    condition : str
        ``"CrossMass"``, ``"Variance"`` or ``"LipschitzK(k)"``.
    lhs, rhs : float
        The condition holds when ``lhs < rhs``; ``rhs = min b``.
    holds : bool
    witness : str
        The test construction used.
    energy_lower_bound : float
        ``-lhs``: a lower bound for ``beta_1`` when the construction is admissible.
    sup_sigma_c : float
    constant : float, optional
        Geometric constant of the Lipschitz-k check (after inflation).
    """

    condition: str
    lhs: float
    rhs: float
    holds: bool
    witness: str
    energy_lower_bound: float
    sup_sigma_c: float
    constant: float | None = None

    @property
    def margin(self):
        return self.rhs - self.lhs


def _report(condition, lhs, rhs, witness, constant=None):
    return GapReport(condition, float(lhs), float(rhs), bool(lhs < rhs), witness,
                     -float(lhs), -float(rhs), constant)


def _min_b(kernel, domain, spectrum):
    if spectrum is None:
        spectrum = _band.continuous_spectrum(kernel, domain)
    return spectrum.min_b


def pair_integral(kernel, part1, part2, g=None, order=None):
    """``int_{part1} int_{part2} J(x - y) g(x, y) dy dx``.

    The outer rule on ``part1`` is split where the kernel's break radii
    reach the faces of ``part2``; the inner integral uses kernel-adapted
    local rules.  ``g(x, Y)`` gets one ``x`` and an ``(m, n)`` array.
    """
    outer = _band.outer_rule(kernel, part1, order, faces_of=part2)
    vals = np.empty(outer.size)
    for i, x in enumerate(outer.nodes):
        if g is None:
            vals[i] = _band.convolve(kernel, part2, x)
        else:
            vals[i] = _band.convolve(kernel, part2, x, lambda y, x=x: g(x, y))
    return outer.integrate(vals)


def difference_integral(kernel, part1, part2, h=None, order=None):
    """``int_{part1} int_{part2} J(x - y) h(y - x) dy dx`` reduced to one integral in ``z = y - x``.

    The integrand becomes ``J(z) h(z) V(z)`` with :func:`overlap_measure`
    ``V``, which is a polynomial on each cell of
    :func:`~nonlocal_gap.domain.overlap_cells`, and
    :func:`band.difference_rule` integrates it cell by cell.  ``h`` maps ``(m, n)`` differences to
    ``m`` values; ``None`` means ``h = 1``.
    """
    rule = _band.difference_rule(kernel, part1, part2, order)
    if rule is None:
        return 0.0
    vals = kernel(rule.nodes) * overlap_measure(part1, part2, rule.nodes)
    if h is not None:
        vals = vals * np.asarray(h(rule.nodes), dtype=float)
    return math.fsum(rule.weights * vals)


def check_cross_mass(kernel, domain, axis=None, spectrum=None):
    """Cross-mass condition ``(4/|Omega|) iint_{Omega_1 x Omega_2} J < min b``.

    ``Omega_1, Omega_2`` are the halves of an equal-measure split along
    ``axis`` (default: the axis of largest inertia).
    """
    _band._check(kernel, domain)
    axis = domain.max_inertia_axis if axis is None else axis
    split = domain.equal_split(axis)
    cross = difference_integral(kernel, split.part1, split.part2)
    lhs = 4.0 / domain.measure * cross
    witness = f"equal-measure split along axis {axis} at {split.position:.17g}"
    return _report("CrossMass", lhs, _min_b(kernel, domain, spectrum), witness)


def variance_lhs(kernel, domain):
    unit, scale = domain.rescale_to_unit_measure()
    return kernel.moment2 / (2.0 * unit.inertia_max * scale**2), unit.max_inertia_axis


def check_variance(kernel, domain, spectrum=None):
    """Variance condition ``m_2 / (2 I_max(Omega_0) |Omega|^{2/n}) < min b``.

    ``I_max`` is the largest inertia about the barycenter of the
    unit-measure rescaling ``Omega_0``.
    """
    _band._check(kernel, domain)
    lhs, axis = variance_lhs(kernel, domain)
    witness = f"linear test function along inertia axis {axis}"
    return _report("Variance", lhs, _min_b(kernel, domain, spectrum), witness)


@dataclass(frozen=True)
class LinearBound:
    """Linear test function ``v = c (x_axis - xbar_axis)`` with ``||v|| = 1``.

    ``bound`` is the analytic lower bound and ``energy`` the quadrature
    value of ``<L v, v>``; ``energy >= bound`` always.  Unpacks as
    ``(bound, axis)``.
    """

    bound: float
    axis: int
    energy: float
    c_squared: float

    def __iter__(self):
        return iter((self.bound, self.axis))


def linear_testfunction_bound(kernel, domain, energy=True):
    """Analytic and quadrature energy of the normalized linear test function.

    ``bound = -|Omega_0| m_2 / (2 I_k(Omega_0) s^2)`` where ``s`` is the
    scale with ``Omega = s Omega_0`` and ``k`` the axis of largest inertia.

    Raises
    ------
    EvaluationError
        If the quadrature energy falls below the analytic bound.
    """
    _band._check(kernel, domain)
    unit, scale = domain.rescale_to_unit_measure()
    axis = unit.max_inertia_axis
    inertia = unit.inertia(axis)
    if not inertia > 0:
        raise InvalidInputError("the domain has zero inertia")
    bound = -unit.measure * kernel.moment2 / (2.0 * inertia * scale**2)
    c2 = 1.0 / domain.inertia(axis)
    value = math.nan
    if energy:
        xbar = domain.barycenter[axis]
        value = -0.5 * c2 * difference_integral(kernel, domain, domain, lambda z: z[:, axis] ** 2)
        if value < bound - 1e-10 * max(1.0, abs(bound)):
            raise EvaluationError(
                f"linear test-function energy {value} is below the analytic bound {bound}",
                location=xbar,
            )
    return LinearBound(bound, axis, value, c2)


def _sample_points(domain, count, rng):
    vols = domain.box_volumes
    boxes = rng.choice(domain.n_boxes, size=count, p=vols / vols.sum())
    u = rng.random((count, domain.dimension))
    return domain.lower[boxes] + u * (domain.upper[boxes] - domain.lower[boxes]), boxes


def lipschitz_constant(basis, pairs=20000, seed=0):
    """Sampled ``sup |u(x) - u(y)|^2 / |x - y|^2`` over unit-norm ``u`` in the span.

    For a pair the supremum over the unit sphere is ``|d|^2`` with
    ``d = (phi(x) - phi(y)) / |x - y|``, so only the pair maximum is needed.
    Half the pairs are far apart; half are short steps that probe gradients.
    """
    rng = np.random.default_rng(seed)
    dom = basis.domain
    x, boxes = _sample_points(dom, pairs, rng)
    y, _ = _sample_points(dom, pairs, rng)
    lo, hi = dom.bounding_box
    step = 1e-6 * float(np.max(hi - lo))
    direction = rng.normal(size=x.shape)
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    near = x + step * direction
    near = np.clip(near, dom.lower[boxes], dom.upper[boxes])
    ends = np.concatenate([y, near])
    starts = np.concatenate([x, x])
    dist = np.linalg.norm(starts - ends, axis=1)
    keep = dist > 0
    d = (basis(starts[keep]) - basis(ends[keep])) / dist[keep, None]
    return float(np.max(np.sum(d * d, axis=1)))


def check_lipschitz_k(kernel, domain, k, basis_choice="global", pairs=20000, seed=0, spectrum=None):
    """Lipschitz-k condition ``C(k, n, Omega_0) m_2 / |Omega|^{2/n} < min b``.

    ``W_0`` is spanned by the first ``k + 1`` orthonormal polynomials on
    ``Omega_0``; ``C = 1.1 L_k / 2`` with ``L_k`` from
    :func:`lipschitz_constant`.  The 10% inflation guards the sampled
    estimate from below.
    """
    _band._check(kernel, domain)
    if k < 0:
        raise InvalidInputError("k must be non-negative")
    unit, scale = domain.rescale_to_unit_measure()
    if k == 0:
        raw = 0.0
    else:
        w0 = galerkin.build_basis(unit, k, kind=basis_choice)
        raw = lipschitz_constant(w0, pairs, seed)
    constant = LIPSCHITZ_INFLATION * raw / 2.0
    lhs = constant * kernel.moment2 / scale**2
    witness = f"{k + 1}-dimensional {basis_choice} polynomial space, sampled L_k={raw:.17g}"
    return _report(f"LipschitzK({k})", lhs, _min_b(kernel, domain, spectrum), witness, constant)


def check_all(kernel, domain, k=None, spectrum=None):
    """Cross-mass, variance and (if ``k`` is given) Lipschitz-k reports."""
    spectrum = _band.continuous_spectrum(kernel, domain) if spectrum is None else spectrum
    reports = [check_cross_mass(kernel, domain, spectrum=spectrum),
               check_variance(kernel, domain, spectrum=spectrum)]
    if k is not None:
        reports.append(check_lipschitz_k(kernel, domain, k, spectrum=spectrum))
    return reports


@dataclass(frozen=True)
class ExampleExpReport:
    """Cross-mass margin ``Delta`` for the generalized exponential on ``(-L, L)``.

    ``primitive`` is ``min b`` minus the cross mass computed by the generic
    machinery (``nan`` when not validated).
    """

    p: float
    lam: float
    L: float
    delta: float
    eta: float
    case_label: str
    eta_threshold: float | None = None
    primitive: float = math.nan

    @property
    def discrepancy(self):
        return abs(self.delta - self.primitive)


def _delta_rule(L, order=24, depth=60):
    h = 0.5 * L
    grade = h * 2.0 ** -np.arange(depth + 1)
    breaks = np.unique(np.concatenate([[0.0, h], grade, h - grade]))
    return quadrature.composite_rule(breaks, order)


def delta_reduced(kernel, L):
    """``int_0^{L/2} (2t/L) [F(L/2 - t) - F(L/2 + t)] dt`` with ``F(u) = J(u) + J(2L - u)``.

    The panels are graded toward both ends so the kernel's peak at
    ``t = L/2`` is resolved at any width.
    """
    t, w = _delta_rule(L)
    h = 0.5 * L

    def F(u):
        return kernel(u) + kernel(2.0 * L - u)

    vals = 2.0 * t / L * (F(h - t) - F(h + t))
    return math.fsum(w * vals)


def example_exp_delta(p, lam, L, validate=True):
    """``Delta(L, lambda)`` for ``J = C_p exp(-lambda |z|^p)`` on ``(-L, L)``.

    Parameters
    ----------
    p, lam, L : float
        Positive shape, rate and half-length.
    validate : bool
        Recompute ``Delta`` as ``min b`` minus the cross mass of the split
        at 0 and raise if the two differ by more than ``1e-8``.

    Returns
    -------
    ExampleExpReport
    """
    if not (p > 0 and lam > 0 and L > 0):
        raise InvalidInputError("p, lambda and L must be positive")
    kern = generalized_exponential(p, lam, 1)
    delta = delta_reduced(kern, L)
    primitive = math.nan
    if validate:
        rep = check_cross_mass(kern, Domain.interval(-L, L), axis=0)
        primitive = rep.margin
        if abs(primitive - delta) > DELTA_TOL:
            raise EvaluationError(
                f"reduced Delta {delta!r} and primitive {primitive!r} differ", location=(p, lam, L)
            )
    label = "UnconditionalPLe1" if p <= 1 else "ThresholdPGt1"
    return ExampleExpReport(p, lam, L, delta, L * lam ** (1.0 / p), label, None, primitive)


def delta_of_eta(p, lam, eta, kern=None):
    kern = generalized_exponential(p, lam, 1) if kern is None else kern
    return delta_reduced(kern, eta * lam ** (-1.0 / p))


def example_exp_threshold(p, lam, bracket=ETA_BRACKET, tol=1e-6, checks=10):
    """Threshold ``eta_0`` where ``Delta`` changes sign, by bisection in ``eta``.

    After bisection ``Delta > 0`` is verified at ``checks`` log-spaced
    values of ``eta`` in ``(eta_0, bracket[1]]``.

    Raises
    ------
    BracketError
        If ``Delta`` has the same sign at both ends of the bracket.
    EvaluationError
        If a verification point has ``Delta <= 0``.
    """
    if not p > 1:
        raise InvalidInputError("a threshold exists only for p > 1")
    kern = generalized_exponential(p, lam, 1)
    lo, hi = map(float, bracket)
    dlo, dhi = delta_of_eta(p, lam, lo, kern), delta_of_eta(p, lam, hi, kern)
    if not (dlo < 0 < dhi):
        raise BracketError(
            f"Delta does not change sign on eta in [{lo}, {hi}]: Delta={dlo:.3e}, {dhi:.3e}",
            endpoints=((lo, dlo), (hi, dhi)),
        )
    # bisect well below tol so runs at different lambda agree to rounding
    while hi - lo > 1e-3 * tol:
        mid = 0.5 * (lo + hi)
        if delta_of_eta(p, lam, mid, kern) < 0:
            lo = mid
        else:
            hi = mid
    eta0 = 0.5 * (lo + hi)
    for eta in np.geomspace(hi * (1 + 1e-3), bracket[1], checks):
        if not delta_of_eta(p, lam, eta, kern) > 0:
            raise EvaluationError(f"Delta is not positive at eta={eta} above the threshold", location=eta)
    return eta0


def delta_sweep(p, L_values, lam_values, validate=False):
    """``Delta`` on the grid ``L_values x lam_values``."""
    return [example_exp_delta(p, lam, L, validate) for L in L_values for lam in lam_values]
