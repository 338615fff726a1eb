"""Tensor-product Gauss-Legendre rules on box unions and closure minimization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import EvaluationError, InvalidInputError

DEFAULT_ORDER = {1: 24, 2: 16, 3: 8}
DEFAULT_GRID_DENSITY = {1: 201, 2: 33, 3: 9}
DEFAULT_REFINEMENT_STEPS = 4
_GOLDEN_ITERATIONS = 48
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def default_order(dimension):
    return DEFAULT_ORDER.get(dimension, 8)


@lru_cache(maxsize=None)
def _leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order):
    """Gauss-Legendre nodes and weights on ``[-1, 1]``."""
    if order < 1:
        raise InvalidInputError(f"quadrature order must be positive, got {order}")
    return _leggauss(int(order))


def composite_rule(breaks, order):
    """Composite Gauss-Legendre rule on consecutive intervals of ``breaks``.

    Zero-length intervals are dropped, so duplicated or unsorted break
    points are harmless.
    """
    b = np.unique(np.asarray(breaks, dtype=float))
    if b.size < 2:
        return np.empty(0), np.empty(0)
    x, w = gauss_legendre(order)
    lo, hi = b[:-1], b[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights of a quadrature over a box union.

    ``box_ids[i]`` is the index of the box that produced node ``i``.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    box_ids: np.ndarray

    @property
    def size(self):
        return self.weights.size

    @property
    def measure(self):
        return math.fsum(self.weights)

    def integrate(self, values):
        """Compensated weighted sum of ``values`` sampled on the nodes."""
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise EvaluationError(
                f"non-finite integrand at node {self.nodes[bad]}", location=self.nodes[bad]
            )
        return math.fsum(self.weights * values)


def _axis_rule(lo, hi, order, panels, cuts):
    breaks = [np.linspace(lo, hi, panels + 1)]
    if cuts is not None and len(cuts):
        c = np.asarray(cuts, dtype=float)
        breaks.append(c[(c > lo) & (c < hi)])
    return composite_rule(np.concatenate(breaks), order)


def tensor_rule(domain, order=None, panels=1, cuts=None):
    """Tensor Gauss-Legendre rule with ``order`` points per axis per panel.

    Parameters
    ----------
    domain : Domain
    order : int, optional
        Points per axis per panel; defaults to 24/16/8 in 1/2/3-D.
    panels : int
        Equal sub-intervals per axis per box.
    cuts : sequence of array_like, optional
        Extra break coordinates for each axis; panels are split where a cut
        falls strictly inside a box.
    """
    n = domain.dimension
    order = default_order(n) if order is None else int(order)
    if cuts is not None and len(cuts) != n:
        raise InvalidInputError("cuts needs one coordinate list per axis")
    all_nodes, all_weights, all_ids = [], [], []
    for b, (lo, hi) in enumerate(zip(domain.lower, domain.upper)):
        xs, ws = [], []
        for k in range(n):
            x, w = _axis_rule(lo[k], hi[k], order, panels, None if cuts is None else cuts[k])
            xs.append(x)
            ws.append(w)
        grids = np.meshgrid(*xs, indexing="ij")
        wgrid = ws[0]
        for w in ws[1:]:
            wgrid = np.multiply.outer(wgrid, w)
        nodes = np.stack([g.ravel() for g in grids], axis=-1)
        all_nodes.append(nodes)
        all_weights.append(np.asarray(wgrid).ravel())
        all_ids.append(np.full(nodes.shape[0], b))
    return QuadratureRule(
        order=order,
        nodes=np.concatenate(all_nodes),
        weights=np.concatenate(all_weights),
        box_ids=np.concatenate(all_ids),
    )


def local_rule(domain, center, offsets, window, order):
    """Rule on ``domain`` intersected with the cube ``center +- window``.

    Every axis is split at ``center_k +- offsets`` so that an integrand
    that is only piecewise smooth in ``|y - center|`` is integrated panel by
    panel.  Returns ``None`` when the intersection is empty.
    """
    center = np.asarray(center, dtype=float)
    clipped = domain.clip(center - window, center + window)
    if clipped is None:
        return None
    offsets = np.asarray(offsets, dtype=float)
    cuts = [np.concatenate([c - offsets, c + offsets]) for c in center]
    return tensor_rule(clipped, order, cuts=cuts)


def _box_arcs(lo, hi, center, r):
    """Angular intervals of the circles ``|y - center| = r`` inside one rectangle.

    Returns ``(start, end)`` arrays of shape ``(m, 8)``; empty pieces have
    ``end <= start``.  Axis 0 confines ``|theta|`` to ``[alpha_lo,
    alpha_hi]`` and axis 1 confines ``|theta - pi/2|``; the pieces are the
    pairwise intersections, with the axis-1 arcs also shifted by ``-2 pi``.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        def band(lo_k, hi_k, c_k):
            a_lo = np.arccos(np.clip((hi_k - c_k) / r, -1.0, 1.0))
            a_hi = np.arccos(np.clip((lo_k - c_k) / r, -1.0, 1.0))
            return a_lo, a_hi

        a_lo, a_hi = band(lo[0], hi[0], center[0])
        b_lo, b_hi = band(lo[1], hi[1], center[1])
    h = 0.5 * math.pi
    first = [(a_lo, a_hi), (-a_hi, -a_lo)]
    second = [(h + b_lo, h + b_hi), (h - b_hi, h - b_lo)]
    starts, ends = [], []
    for s0, e0 in first:
        for s1, e1 in second:
            for shift in (0.0, -2.0 * math.pi):
                starts.append(np.maximum(s0, s1 + shift))
                ends.append(np.minimum(e0, e1 + shift))
    return np.stack(starts, axis=1), np.stack(ends, axis=1)


def polar_rule(domain, center, radial_breaks, radius, order, angular_order=None):
    """Rule on ``domain`` intersected with the disk ``|y - center| <= radius`` (2-D only).

    The radial panels break at ``radial_breaks`` and at the distances from
    ``center`` to every face line and corner, so an integrand ``J(|y - c|)
    g(y)`` with piecewise-smooth radial profile ``J`` and smooth ``g`` is
    integrated panel by panel.  On each panel ``r = a + h s^2`` removes the
    square-root behaviour of the arc length where a circle becomes tangent
    to a face.  The arcs of each circle inside each box are exact.

    Returns ``None`` when the disk misses the domain.
    """
    if domain.dimension != 2:
        raise InvalidInputError("polar rules are two-dimensional")
    angular_order = order if angular_order is None else angular_order
    c = np.asarray(center, dtype=float)
    lo, hi = domain.lower, domain.upper
    near = np.linalg.norm(np.maximum(np.maximum(lo - c, c - hi), 0.0), axis=1)
    reach = np.linalg.norm(np.maximum(np.abs(lo - c), np.abs(hi - c)), axis=1)
    r_max = min(float(radius), float(reach.max()))
    if not np.any(near < r_max):
        return None
    corners = np.concatenate([
        np.hypot(np.stack([lo[:, 0], hi[:, 0]], 1)[:, :, None] - c[0],
                 np.stack([lo[:, 1], hi[:, 1]], 1)[:, None, :] - c[1]).ravel(),
        np.abs(np.concatenate([lo, hi]) - c).ravel(),
        near, reach,
    ])
    b = np.asarray(radial_breaks, dtype=float)
    b = np.unique(np.concatenate([[0.0, r_max], b, corners]))
    b = b[(b >= 0.0) & (b <= r_max)]
    # past a tangency at distance d the arc length behaves like
    # sqrt(r - d) and then like arccos(d / r); grade geometrically from d
    # so that neither feature is resolved on a panel much longer than it
    faces = np.unique(np.abs(np.concatenate([lo, hi]) - c))
    faces = faces[(faces > 0) & (faces < r_max)]
    steps = np.full(faces.size, np.inf)
    # one face's grading can land just past another face; regrade until stable
    for _ in range(8):
        new = np.array([min(b[b > d][0] - d, d) for d in faces])
        finer = new < steps
        if not np.any(finer):
            break
        steps = np.minimum(steps, new)
        extra = (faces[finer, None] + steps[finer, None] * 2.0 ** np.arange(1, 64)[None, :]).ravel()
        b = np.unique(np.concatenate([b, extra[extra < r_max]]))
    s, ws = gauss_legendre(order)
    s, ws = 0.5 * (s + 1.0), 0.5 * ws
    a, h = b[:-1, None], np.diff(b)[:, None]
    r = (a + h * s * s).ravel()
    wr = (2.0 * h * s * ws).ravel() * r
    t, wt = gauss_legendre(angular_order)
    nodes, weights, ids = [], [], []
    for k in range(lo.shape[0]):
        live = (r > near[k]) & (r < reach[k])
        if not np.any(live):
            continue
        rk, wk = r[live], wr[live]
        start, end = _box_arcs(lo[k], hi[k], c, rk)
        half = 0.5 * np.maximum(end - start, 0.0)
        keep = half > 0
        row = np.nonzero(keep)[0]
        theta = (start + half)[keep][:, None] + half[keep][:, None] * t[None, :]
        rr = rk[row][:, None]
        pts = np.stack([c[0] + rr * np.cos(theta), c[1] + rr * np.sin(theta)], axis=-1).reshape(-1, 2)
        np.clip(pts, lo[k], hi[k], out=pts)
        nodes.append(pts)
        weights.append(((wk[row] * half[keep])[:, None] * wt[None, :]).ravel())
        ids.append(np.full(pts.shape[0], k))
    if not nodes:
        return None
    return QuadratureRule(order=order, nodes=np.concatenate(nodes),
                          weights=np.concatenate(weights), box_ids=np.concatenate(ids))


def _values(f, points):
    v = np.asarray(f(points), dtype=float).reshape(-1)
    if v.size != points.shape[0]:
        raise InvalidInputError("integrand must return one value per point")
    return v


def integrate(domain, f, order=None, rule=None):
    """``int_domain f``; ``f`` maps an ``(m, n)`` array of points to ``m`` values."""
    rule = tensor_rule(domain, order) if rule is None else rule
    return rule.integrate(_values(f, rule.nodes))


def integrate_product(domain_a, domain_b, g, order=None, chunk=256):
    """``iint_{A x B} g(x, y) dx dy`` on the product of the two tensor rules.

    ``g(x, y)`` receives broadcastable arrays of shape ``(c, 1, n)`` and
    ``(1, m, n)`` and must return shape ``(c, m)``.
    """
    ra = tensor_rule(domain_a, order)
    rb = tensor_rule(domain_b, order)
    y = rb.nodes[None, :, :]
    partial = []
    for start in range(0, ra.size, chunk):
        xa = ra.nodes[start:start + chunk, None, :]
        vals = np.asarray(g(xa, y), dtype=float)
        if not np.all(np.isfinite(vals)):
            i, j = np.argwhere(~np.isfinite(vals))[0]
            loc = (ra.nodes[start + i], rb.nodes[j])
            raise EvaluationError(f"non-finite integrand at {loc}", location=loc)
        partial.extend(ra.weights[start:start + chunk] * (vals @ rb.weights))
    return math.fsum(partial)


def _golden(phi, a, b, fa, fb):
    """Golden-section search on ``[a, b]``; returns the best point seen."""
    best_t, best_v = (a, fa) if fa <= fb else (b, fb)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = phi(c), phi(d)
    for _ in range(_GOLDEN_ITERATIONS):
        if fc < best_v:
            best_t, best_v = c, fc
        if fd < best_v:
            best_t, best_v = d, fd
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = phi(d)
    return best_t, best_v


def minimize_on_closure(domain, f, grid_density=None, refinement_steps=None, return_samples=False):
    """Minimize a continuous ``f`` over the closure of ``domain``.

    A grid containing every face and corner of every box is searched
    first; the best node is then refined by coordinate-wise golden-section
    sweeps inside its box, halving the search half-width each sweep.  A
    refined point is accepted only when it improves on the grid, so the
    returned value never exceeds ``f`` at any grid node.

    Parameters
    ----------
    domain : Domain
    f : callable
        Maps an ``(m, n)`` array of points to ``m`` values.
    grid_density : int, optional
        Grid points per axis per box (endpoints included).
    refinement_steps : int, optional
        Number of coordinate sweeps.
    return_samples : bool
        Also return the grid ``(points, values)``.

    Returns
    -------
    point : ndarray
    value : float
    samples : tuple, only if ``return_samples``
    """
    n = domain.dimension
    density = DEFAULT_GRID_DENSITY.get(n, 9) if grid_density is None else int(grid_density)
    steps = DEFAULT_REFINEMENT_STEPS if refinement_steps is None else int(refinement_steps)
    if density < 2:
        raise InvalidInputError("grid_density must be at least 2")
    points, owners = domain.closure_grid(density, return_owner=True)
    values = _values(f, points)
    i = int(np.argmin(values))
    best = points[i].copy()
    best_v = float(values[i])
    box = owners[i]
    lo, hi = domain.lower[box], domain.upper[box]
    half = (hi - lo) / (density - 1)
    for _ in range(steps):
        for k in range(n):
            a = max(lo[k], best[k] - half[k])
            b = min(hi[k], best[k] + half[k])
            if b <= a:
                continue

            def phi(t, k=k):
                p = best.copy()
                p[k] = t
                return float(_values(f, p[None, :])[0])

            t, v = _golden(phi, a, b, phi(a), phi(b))
            if v < best_v:
                best[k] = t
                best_v = v
        half = 0.5 * half
    if return_samples:
        return best, best_v, (points, values)
    return best, best_v
