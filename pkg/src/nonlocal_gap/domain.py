"""Bounded domains given as finite unions of axis-aligned boxes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError, SplitError


def _as_boxes(boxes, dimension=None):
    lows, highs = [], []
    for box in boxes:
        if len(box) == 2 and np.ndim(box[0]) == 1:
            lo, hi = box
        else:
            flat = np.asarray(box, dtype=float).ravel()
            if flat.size % 2:
                raise InvalidInputError(f"box {box!r} needs lower and upper corners")
            lo, hi = flat[: flat.size // 2], flat[flat.size // 2:]
        lows.append(np.asarray(lo, dtype=float).ravel())
        highs.append(np.asarray(hi, dtype=float).ravel())
    if not lows:
        raise InvalidInputError("a domain needs at least one box")
    dims = {lo.size for lo in lows} | {hi.size for hi in highs}
    if len(dims) != 1:
        raise InvalidInputError("all box corners must have the same dimension")
    if dimension is not None and dims != {dimension}:
        raise InvalidInputError(f"boxes are {dims.pop()}-dimensional, expected {dimension}")
    return np.array(lows), np.array(highs)


@dataclass(frozen=True, eq=False)
class Domain:
    """Disjoint union of open boxes ``prod_k (lower[b, k], upper[b, k])``.

    Attributes
    ----------
    lower, upper : ndarray, shape (m, n)
        Box corners.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float, ndmin=2)
        hi = np.array(self.upper, dtype=float, ndmin=2)
        if lo.shape != hi.shape:
            raise InvalidInputError("lower and upper corners have different shapes")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidInputError("box corners must be finite")
        if np.any(hi <= lo):
            raise InvalidInputError("every box needs strictly positive side lengths")
        m = lo.shape[0]
        for i in range(m):
            for j in range(i + 1, m):
                overlap = np.minimum(hi[i], hi[j]) - np.maximum(lo[i], lo[j])
                scale = np.maximum(hi[i] - lo[i], hi[j] - lo[j])
                if np.all(overlap > 1e-14 * scale):
                    raise InvalidInputError(f"boxes {i} and {j} overlap")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_boxes(cls, boxes, dimension=None):
        """From ``[(lo, hi), ...]`` pairs or flat ``[lo..., hi...]`` lists."""
        lo, hi = _as_boxes(boxes, dimension)
        return cls(lo, hi)

    @classmethod
    def interval(cls, a, b):
        return cls(np.array([[a]]), np.array([[b]]))

    @classmethod
    def box(cls, lower, upper):
        return cls(np.array([lower], dtype=float), np.array([upper], dtype=float))

    @classmethod
    def from_config(cls, section):
        allowed = {"boxes", "dimension"}
        unknown = set(section) - allowed
        if unknown:
            raise InvalidInputError(f"unknown domain keys: {sorted(unknown)}")
        if "boxes" not in section:
            raise InvalidInputError("domain section is missing key 'boxes'")
        try:
            boxes = json.loads(section["boxes"])
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"domain 'boxes' is not a valid list: {exc}") from None
        dim = int(section["dimension"]) if "dimension" in section else None
        return cls.from_boxes(boxes, dim)

    @property
    def dimension(self):
        return self.lower.shape[1]

    @property
    def n_boxes(self):
        return self.lower.shape[0]

    @property
    def box_volumes(self):
        return np.prod(self.upper - self.lower, axis=1)

    @property
    def measure(self):
        return math.fsum(self.box_volumes)

    @property
    def barycenter(self):
        centers = 0.5 * (self.lower + self.upper)
        return self.box_volumes @ centers / self.measure

    @property
    def bounding_box(self):
        return self.lower.min(axis=0), self.upper.max(axis=0)

    def _check_axis(self, axis):
        if not 0 <= axis < self.dimension:
            raise InvalidInputError(f"axis {axis} out of range for a {self.dimension}-D domain")

    def inertia(self, axis):
        """``int (x_axis - xbar_axis)^2 dx`` in closed form (axes are 0-based)."""
        self._check_axis(axis)
        c = self.barycenter[axis]
        lo, hi = self.lower[:, axis] - c, self.upper[:, axis] - c
        cross = self.box_volumes / (self.upper[:, axis] - self.lower[:, axis])
        return math.fsum(cross * (hi**3 - lo**3) / 3.0)

    def inertias(self):
        return np.array([self.inertia(k) for k in range(self.dimension)])

    @property
    def max_inertia_axis(self):
        # first axis wins ties
        return int(np.argmax(self.inertias()))

    @property
    def inertia_max(self):
        return float(self.inertias().max())

    def scaled(self, factor):
        return Domain(self.lower * factor, self.upper * factor)

    def translated(self, shift):
        shift = np.asarray(shift, dtype=float)
        return Domain(self.lower + shift, self.upper + shift)

    def rescale_to_unit_measure(self):
        """Return ``(Omega_0, scale)`` with ``|Omega_0| = 1`` and ``Omega = scale * Omega_0``."""
        scale = self.measure ** (1.0 / self.dimension)
        return self.scaled(1.0 / scale), scale

    def clip(self, lower, upper):
        """Intersection with the box ``(lower, upper)``, or ``None`` if empty."""
        lo = np.maximum(self.lower, lower)
        hi = np.minimum(self.upper, upper)
        keep = np.all(hi > lo, axis=1)
        if not np.any(keep):
            return None
        return Domain(lo[keep], hi[keep])

    def contains(self, points, closed=True):
        return self.locate(points, closed) >= 0

    def locate(self, points, closed=True):
        """Index of the first box containing each point, ``-1`` outside."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        owner = np.full(p.shape[0], -1)
        for b in range(self.n_boxes - 1, -1, -1):
            if closed:
                inside = np.all((p >= self.lower[b]) & (p <= self.upper[b]), axis=1)
            else:
                inside = np.all((p > self.lower[b]) & (p < self.upper[b]), axis=1)
            owner[inside] = b
        return owner

    def closure_grid(self, density, return_owner=False):
        """Tensor grid per box with ``density`` points per axis, faces and corners included."""
        pts, owner = [], []
        for b in range(self.n_boxes):
            axes = [np.linspace(self.lower[b, k], self.upper[b, k], density) for k in range(self.dimension)]
            grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
            pts.append(grid)
            owner.append(np.full(grid.shape[0], b))
        pts = np.concatenate(pts)
        if return_owner:
            return pts, np.concatenate(owner)
        return pts

    def faces(self, axis):
        """Distinct face coordinates of all boxes along ``axis``."""
        return np.unique(np.concatenate([self.lower[:, axis], self.upper[:, axis]]))

    def _mass_below(self, axis, t):
        length = self.upper[:, axis] - self.lower[:, axis]
        frac = np.clip((t - self.lower[:, axis]) / length, 0.0, 1.0)
        return math.fsum(self.box_volumes * frac)

    def equal_split(self, axis=0):
        """Split by a hyperplane ``x_axis = t`` into two parts of equal measure.

        ``t`` is located by bisection on the cumulative measure.  When the
        half-measure level is reached on a gap between boxes, the midpoint
        of the gap is used.
        """
        self._check_axis(axis)
        half = 0.5 * self.measure
        a, b = float(self.lower[:, axis].min()), float(self.upper[:, axis].max())
        if not b > a:
            raise SplitError(f"degenerate extent along axis {axis}")
        lo_t, hi_t = a, b
        for _ in range(200):
            mid = 0.5 * (lo_t + hi_t)
            if mid in (lo_t, hi_t):
                break
            if self._mass_below(axis, mid) < half:
                lo_t = mid
            else:
                hi_t = mid
        t = hi_t
        lows, highs = self.lower[:, axis], self.upper[:, axis]
        inside = (lows < t) & (highs > t)
        if np.any(inside):
            # cumulative measure is linear around t: one exact correction step
            slope = math.fsum(self.box_volumes[inside] / (highs[inside] - lows[inside]))
            t = t + (half - self._mass_below(axis, t)) / slope
            t = min(max(t, a), b)
        else:
            left = highs[highs <= t].max() if np.any(highs <= t) else a
            right = lows[lows >= t].min() if np.any(lows >= t) else b
            t = 0.5 * (left + right)
        part1 = self.clip(np.full(self.dimension, -np.inf), np.where(np.arange(self.dimension) == axis, t, np.inf))
        part2 = self.clip(np.where(np.arange(self.dimension) == axis, t, -np.inf), np.full(self.dimension, np.inf))
        if part1 is None or part2 is None:
            raise SplitError(f"split along axis {axis} left an empty part")
        m1, m2 = part1.measure, part2.measure
        if abs(m1 - m2) > 1e-12 * self.measure:
            raise SplitError(f"split measures {m1} and {m2} differ along axis {axis}")
        return Partition(part1, part2, axis, t)

    def to_config(self):
        return json.dumps([list(lo) + list(hi) for lo, hi in zip(self.lower, self.upper)])

    def __repr__(self):
        boxes = ", ".join(
            "x".join(f"({l:g},{h:g})" for l, h in zip(lo, hi)) for lo, hi in zip(self.lower, self.upper)
        )
        return f"Domain({boxes})"


@dataclass(frozen=True)
class Partition:
    """Two disjoint parts whose union is the parent domain, cut at ``x_axis = position``."""

    part1: Domain
    part2: Domain
    axis: int
    position: float


def measure(domain):
    return domain.measure


def barycenter(domain):
    return domain.barycenter


def inertia(domain, axis):
    return domain.inertia(axis)


def rescale_to_unit_measure(domain):
    return domain.rescale_to_unit_measure()


def equal_split(domain, axis=0):
    return domain.equal_split(axis)


def overlap_cells(part1, part2):
    """Grid of boxes on which the overlap measure ``V(z)`` is a polynomial."""
    n = part1.dimension
    edges = []
    for k in range(n):
        e = np.concatenate([
            (part2.lower[None, :, k] - part1.upper[:, None, k]).ravel(),
            (part2.lower[None, :, k] - part1.lower[:, None, k]).ravel(),
            (part2.upper[None, :, k] - part1.upper[:, None, k]).ravel(),
            (part2.upper[None, :, k] - part1.lower[:, None, k]).ravel(),
        ])
        edges.append(np.unique(e))
    grids = np.meshgrid(*[np.arange(e.size - 1) for e in edges], indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    lo = np.stack([edges[k][idx[:, k]] for k in range(n)], axis=1)
    hi = np.stack([edges[k][idx[:, k] + 1] for k in range(n)], axis=1)
    return Domain(lo, hi)


def overlap_measure(part1, part2, z):
    """``V(z) = |part1 intersected with (part2 - z)|`` at each row of ``z``."""
    z = np.asarray(z, dtype=float)[:, None, None, :]
    lo = np.maximum(part1.lower[None, :, None, :], part2.lower[None, None, :, :] - z)
    hi = np.minimum(part1.upper[None, :, None, :], part2.upper[None, None, :, :] - z)
    return np.prod(np.maximum(hi - lo, 0.0), axis=-1).sum(axis=(1, 2))
