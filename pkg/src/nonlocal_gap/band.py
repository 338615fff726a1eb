"""Retained mass ``b(x) = int_Omega J(x - y) dy`` and the continuous spectrum band.

``b`` and every other kernel-weighted integral in the package go through
:func:`convolve`, which builds a rule around ``x`` clipped to the kernel's
truncation radius.  In two dimensions the rule is polar about ``x`` with
radial breaks at the kernel's break radii; elsewhere it is a tensor rule
split at ``x +- r``.  Either way cusps, kinks and narrow peaks of
``J(x - .)`` sit on panel boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .domain import overlap_cells
from .exceptions import InvalidInputError

LOCAL_ORDER = {1: 16, 2: 8, 3: 6}
# grading depth cap per dimension; the tensor rule cost grows like depth^n
LOCAL_DEPTH = {1: 50, 2: 6, 3: 3}
POLAR_ORDER = 12
# the polar Jacobian r softens a cusp at the origin, so shallow grading suffices
POLAR_DEPTH = 12


def _check(kernel, domain):
    if kernel.dimension != domain.dimension:
        raise InvalidInputError(
            f"kernel is {kernel.dimension}-D but domain is {domain.dimension}-D"
        )


def kernel_offsets(kernel, dimension=None):
    n = kernel.dimension if dimension is None else dimension
    r = kernel.radial_breaks()
    if kernel.family in ("genexp", "gaussian"):
        cap = LOCAL_DEPTH[n]
        r = r[r >= kernel.radius * 2.0**-cap]
        r = np.concatenate([[0.0], r])
    return np.unique(r)


def local_kernel_rule(kernel, domain, x, order=None, radial_only=False):
    """Rule on ``domain`` adapted to ``y -> J(x - y)`` (``None`` if out of reach).

    ``radial_only`` allows a rule that is exact only for integrands
    depending on ``|x - y|`` alone (one angular node per arc in 2-D).
    """
    n = domain.dimension
    if n == 2:
        order = POLAR_ORDER if order is None else order
        breaks = kernel.radial_breaks(depth=None if kernel.smooth_at_origin else POLAR_DEPTH)
        return quadrature.polar_rule(domain, x, breaks, kernel.radius, order,
                                     1 if radial_only else order)
    order = LOCAL_ORDER[n] if order is None else order
    return quadrature.local_rule(domain, x, kernel_offsets(kernel, n), kernel.radius, order)


def difference_rule(kernel, part1, part2, order=None):
    """Rule in ``z = y - x`` on the cells of ``overlap_cells(part1, part2)``.

    Adapted to ``J(z)`` about ``z = 0``, so ``J(z) V(z) h(z)`` with the
    overlap measure ``V`` and smooth ``h`` is integrated panel by panel.
    """
    _check(kernel, part1)
    cells = overlap_cells(part1, part2)
    return local_kernel_rule(kernel, cells, np.zeros(part1.dimension), order)


def convolve(kernel, domain, x, g=None, order=None):
    """``int_Omega J(x - y) g(y) dy`` at a single point ``x``.

    ``g`` maps an ``(m, n)`` array of ``y`` nodes to ``m`` values; ``None``
    means ``g = 1`` (the retained mass).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    rule = local_kernel_rule(kernel, domain, x, order, radial_only=g is None)
    if rule is None:
        return 0.0
    kw = rule.weights * kernel(x[None, :] - rule.nodes)
    if g is None:
        return math.fsum(kw)
    return math.fsum(kw * np.asarray(g(rule.nodes), dtype=float))


def retained_mass(kernel, domain, x, order=None):
    """``b(x)`` at one point ``x`` or at each row of an ``(m, n)`` array."""
    _check(kernel, domain)
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1 and (x.size == domain.dimension or x.ndim == 0):
        return convolve(kernel, domain, np.atleast_1d(x), order=order)
    pts = x.reshape(-1, domain.dimension)
    return np.array([convolve(kernel, domain, p, order=order) for p in pts])


def retained_mass_field(kernel, domain, order=None):
    """Vectorized ``b``: maps ``(m, n)`` points to ``m`` values."""
    _check(kernel, domain)

    def b(points):
        pts = np.asarray(points, dtype=float).reshape(-1, domain.dimension)
        return np.array([convolve(kernel, domain, p, order=order) for p in pts])

    return b


def outer_rule(kernel, domain, order=None, faces_of=None):
    """Tensor rule on ``domain`` with breaks at ``face +- r`` for kernel break radii ``r``.

    Integrands of the form ``x -> int_D J(x - y) ... dy`` lose smoothness
    where ``x +- r`` crosses a face of ``D`` (``faces_of``, default
    ``domain`` itself); this rule puts those loci on panel boundaries.
    """
    n = domain.dimension
    order = LOCAL_ORDER[n] if order is None else order
    faces_of = domain if faces_of is None else faces_of
    offs = kernel_offsets(kernel, n)
    offs = offs[offs <= kernel.radius]
    cuts = []
    for k in range(n):
        f = faces_of.faces(k)
        cuts.append(np.concatenate([f[:, None] - offs[None, :], f[:, None] + offs[None, :]]).ravel())
    return quadrature.tensor_rule(domain, order, cuts=cuts)


@dataclass(frozen=True, eq=False)
class SpectralBand:
    """Continuous spectrum ``[inf_sigma_c, sup_sigma_c] = [-max b, -min b]``.

    ``b_samples`` holds the closure grid and the values of ``b`` on it.
    """

    sup_sigma_c: float
    inf_sigma_c: float
    argmin_b: np.ndarray
    argmax_b: np.ndarray
    b_samples: tuple

    @property
    def min_b(self):
        return -self.sup_sigma_c

    @property
    def max_b(self):
        return -self.inf_sigma_c


def continuous_spectrum(kernel, domain, grid_density=None, refinement_steps=None, order=None):
    """Endpoints of the continuous spectrum from the extrema of ``b`` on the closure.

    Parameters
    ----------
    kernel : Kernel
    domain : Domain
    grid_density, refinement_steps : int, optional
        Passed to :func:`quadrature.minimize_on_closure`.
    order : int, optional
        Points per panel of the local rules used for ``b``.

    Returns
    -------
    SpectralBand
    """
    b = retained_mass_field(kernel, domain, order)
    cache = {}

    def cached(points):
        pts = np.asarray(points, dtype=float).reshape(-1, domain.dimension)
        out = np.empty(pts.shape[0])
        for i, p in enumerate(pts):
            key = p.tobytes()
            if key not in cache:
                cache[key] = float(b(p[None, :])[0])
            out[i] = cache[key]
        return out

    xmin, vmin, samples = quadrature.minimize_on_closure(
        domain, cached, grid_density, refinement_steps, return_samples=True
    )
    xmax, negmax = quadrature.minimize_on_closure(
        domain, lambda p: -cached(p), grid_density, refinement_steps
    )
    return SpectralBand(
        sup_sigma_c=-vmin,
        inf_sigma_c=negmax,
        argmin_b=xmin,
        argmax_b=xmax,
        b_samples=samples,
    )


def minimum_retained_mass(kernel, domain, grid_density=None, refinement_steps=None):
    """``(argmin, min b)`` over the closure of ``domain``."""
    return quadrature.minimize_on_closure(
        domain, retained_mass_field(kernel, domain), grid_density, refinement_steps
    )


def retained_mass_scaling_study(kernel, reference_domain, scales, grid_density=None, refinement_steps=None):
    """``min b`` on ``scale * reference_domain`` for each scale.

    Returns
    -------
    ndarray, shape (len(scales), 2)
        Rows ``(scale, min b)``.
    """
    scales = np.asarray(scales, dtype=float)
    if np.any(np.diff(scales) <= 0) or np.any(scales <= 0):
        raise InvalidInputError("scales must be positive and strictly increasing")
    rows = []
    for s in scales:
        _, v = minimum_retained_mass(kernel, reference_domain.scaled(s), grid_density, refinement_steps)
        rows.append((s, v))
    return np.array(rows)
