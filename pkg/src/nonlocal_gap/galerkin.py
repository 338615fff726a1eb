"""Galerkin projection of the non-local Neumann operator.

The operator is ``(L v)(x) = int_Omega J(x - y) (v(y) - v(x)) dy =
(K v)(x) - b(x) v(x)``.  On ``V_N = span{phi_0, ..., phi_N}`` with an
orthonormal basis and ``phi_0 = |Omega|^{-1/2}`` it becomes the symmetric
matrix ``M = A - B`` with

    A[k, l] = iint J(x - y) phi_k(x) phi_l(y) dx dy
    B[k, l] = int b(x) phi_k(x) phi_l(x) dx

and the constrained maximizers (``c_0 = 0``, ``|c| = 1``) are the leading
eigenvectors of ``M`` with its first row and column removed.

Either assembly (see :func:`assemble`) sums ``b`` with exactly the
weights used for ``A``, so ``M e_0 = 0`` holds to rounding, and the
nested truncations of one assembled system satisfy Cauchy interlacing
exactly.  Residuals ``||L v - beta v||`` apply ``L`` by direct
kernel-adapted integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import band as _band
from . import quadrature
from .exceptions import IllConditionedBasisError, InvalidInputError
from .linalg import SymMatrix, eigh, restrict

MONOTONE_SLACK = 1e-10
MULTIPLICITY_TOL = 1e-8


def _legendre(t, degree):
    """Legendre ``P_0 .. P_degree`` at ``t``, scaled so ``int_{-1}^{1} P_m^2 = 2``."""
    out = np.empty((degree + 1,) + t.shape)
    out[0] = 1.0
    if degree >= 1:
        out[1] = t
    for m in range(1, degree):
        out[m + 1] = ((2 * m + 1) * t * out[m] - m * out[m - 1]) / (m + 1)
    scale = np.sqrt(2 * np.arange(degree + 1) + 1.0)
    return out * scale.reshape((-1,) + (1,) * t.ndim)


def graded_indices(n, count):
    """First ``count`` multi-indices in ``N^n`` ordered by total degree, then
    lexicographically descending (``(1, 0)`` before ``(0, 1)``)."""
    out = []
    d = 0
    while len(out) < count:
        level = []

        def rec(prefix, remaining, axes):
            if axes == 1:
                level.append(prefix + (remaining,))
                return
            for first in range(remaining, -1, -1):
                rec(prefix + (first,), remaining - first, axes - 1)

        rec((), d, n)
        out.extend(level)
        d += 1
    return out[:count]


def _candidates(domain, count, kind):
    """Candidate list of ``(box, alpha)``; ``box = -1`` means global."""
    if kind == "global":
        return [(-1, a) for a in graded_indices(domain.dimension, count)]
    if kind != "broken":
        raise InvalidInputError(f"unknown basis kind {kind!r}")
    zero = (0,) * domain.dimension
    cands = [(-1, zero)] + [(b, zero) for b in range(1, domain.n_boxes)]
    d = 1
    while len(cands) < count:
        for alpha in _level(domain.dimension, d):
            for b in range(domain.n_boxes):
                cands.append((b, alpha))
        d += 1
    return cands[:count]


def _level(n, d):
    idx = graded_indices(n, math.comb(n + d, n))
    return [a for a in idx if sum(a) == d]


@dataclass(frozen=True, eq=False)
class Basis:
    """Orthonormal polynomial basis on a box union.

    ``phi_j = sum_i coeffs[i, j] * candidate_i`` where the candidates are
    tensor Legendre polynomials, either global on the bounding box
    (``kind="global"``) or per box and zero elsewhere (``kind="broken"``).
    ``coeffs`` is upper triangular, so the first ``m`` functions span the
    same space as the first ``m`` candidates and truncations are nested.

    Attributes
    ----------
    domain : Domain
    kind : str
    candidates : list of (int, tuple)
    coeffs : ndarray
    rule : QuadratureRule
        Rule the orthonormality holds on.
    gram_defect : float
        ``max |<phi_i, phi_j> - delta_ij|`` on ``rule``.
    """

    domain: object
    kind: str
    candidates: list
    coeffs: np.ndarray
    rule: object
    gram_defect: float
    root: object = field(default=None, repr=False)

    @property
    def size(self):
        return len(self.candidates)

    @property
    def N(self):
        return self.size - 1

    def _blocks(self, points, box_ids):
        """Yield ``(rows, cols, values)`` blocks of the candidate matrix and the constant columns."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dom = self.domain
        n = dom.dimension
        boxes = np.array([b for b, _ in self.candidates])
        alpha = np.array([a for _, a in self.candidates])
        degmax = int(alpha.max())

        def tensor(t, cols):
            tables = [_legendre(t[:, k], degmax) for k in range(n)]
            col = tables[0][alpha[cols, 0]]
            for k in range(1, n):
                col = col * tables[k][alpha[cols, k]]
            return col.T

        if self.kind == "global":
            lo, hi = dom.bounding_box
            cols = np.arange(self.size)
            return pts.shape[0], np.empty(0, dtype=int), [(slice(None), cols, tensor((2.0 * pts - (lo + hi)) / (hi - lo), cols))]
        owner = dom.locate(pts) if box_ids is None else np.broadcast_to(np.asarray(box_ids), pts.shape[:1])
        blocks = []
        for b in np.unique(owner):
            cols = np.flatnonzero(boxes == b)
            if b < 0 or cols.size == 0:
                continue
            sel = owner == b
            rows = slice(None) if sel.all() else sel
            lo, hi = dom.lower[b], dom.upper[b]
            blocks.append((rows, cols, tensor((2.0 * pts[rows] - (lo + hi)) / (hi - lo), cols)))
        return pts.shape[0], np.flatnonzero(boxes < 0), blocks

    def candidates_at(self, points, box_ids=None):
        m, const, blocks = self._blocks(points, box_ids)
        out = np.zeros((m, self.size))
        out[:, const] = 1.0
        for rows, cols, vals in blocks:
            if isinstance(rows, slice):
                out[:, cols] = vals
            else:
                out[np.ix_(rows, cols)] = vals
        return out

    def __call__(self, points, box_ids=None):
        """Values ``phi_j(x_i)`` as an ``(m, size)`` array."""
        m, const, blocks = self._blocks(points, box_ids)
        out = np.empty((m, self.size))
        out[:] = self.coeffs[const].sum(axis=0)
        for rows, cols, vals in blocks:
            out[rows] += vals @ self.coeffs[cols]
        return out

    def truncate(self, N):
        if not 0 <= N <= self.N:
            raise InvalidInputError(f"cannot truncate a basis of order {self.N} to {N}")
        m = N + 1
        sub = Basis(self.domain, self.kind, self.candidates[:m], self.coeffs[:m, :m],
                    self.rule, 0.0, self.root if self.root is not None else self)
        object.__setattr__(sub, "gram_defect", _gram_defect(sub))
        return sub


def _gram_defect(basis):
    phi = basis(basis.rule.nodes, basis.rule.box_ids)
    g = phi.T @ (basis.rule.weights[:, None] * phi)
    return float(np.max(np.abs(g - np.eye(basis.size))))


def max_degree(domain, N, kind="broken"):
    """Largest per-axis degree among the first ``N + 1`` candidates."""
    return max(max(a) for _, a in _candidates(domain, N + 1, kind))


def galerkin_order(domain, N, kind="broken"):
    """Per-axis rule order large enough for a degree-``N`` basis and its kernel products."""
    n = domain.dimension
    return max(quadrature.default_order(n), 2 * max_degree(domain, N, kind) + (16 if n == 1 else 8))


def build_basis(domain, N, order=None, kind="broken", panels=1, rule=None):
    """Orthonormal basis ``phi_0 .. phi_N`` with ``phi_0 = |Omega|^{-1/2}``.

    Candidates are orthonormalized by classical Gram-Schmidt with
    re-orthogonalization in the weighted inner product of ``rule``.

    Parameters
    ----------
    domain : Domain
    N : int
        Highest basis index.
    order : int, optional
        Per-axis Gauss order; default from :func:`galerkin_order`.
    kind : {"global", "broken"}
    panels : int
        Equal panels per axis per box of the rule.
    rule : QuadratureRule, optional
        Use this rule instead of building one.

    Raises
    ------
    IllConditionedBasisError
        If a candidate is numerically dependent on its predecessors.
    """
    if N < 0:
        raise InvalidInputError("N must be non-negative")
    if rule is None:
        order = galerkin_order(domain, N, kind) if order is None else order
        rule = quadrature.tensor_rule(domain, order, panels=panels)
    cands = _candidates(domain, N + 1, kind)
    if rule.size < len(cands):
        raise IllConditionedBasisError(
            f"{rule.size} quadrature nodes cannot carry {len(cands)} orthonormal functions"
        )
    proto = Basis(domain, kind, cands, np.eye(len(cands)), rule, 0.0)
    sw = np.sqrt(rule.weights)
    a = sw[:, None] * proto.candidates_at(rule.nodes, rule.box_ids)
    m = a.shape[1]
    q = np.zeros_like(a)
    r = np.zeros((m, m))
    for j in range(m):
        v = a[:, j].copy()
        start = np.linalg.norm(v)
        for _ in range(2):
            h = q[:, :j].T @ v
            v -= q[:, :j] @ h
            r[:j, j] += h
        nrm = np.linalg.norm(v)
        if not nrm > 1e-10 * start:
            raise IllConditionedBasisError(
                f"basis candidate {j} {cands[j]} is numerically dependent (rule order {rule.order})"
            )
        q[:, j] = v / nrm
        r[j, j] = nrm
    coeffs = solve_triangular(r, np.eye(m))
    coeffs[0, 0] = 1.0 / math.sqrt(domain.measure)
    basis = Basis(domain, kind, cands, coeffs, rule, 0.0)
    object.__setattr__(basis, "gram_defect", _gram_defect(basis))
    return basis


def kernel_matrix(kernel, nodes):
    return kernel(nodes[:, None, :] - nodes[None, :, :])


def _unit_tensor(order, n):
    t, w = quadrature.gauss_legendre(order)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    grids = np.meshgrid(*([t] * n), indexing="ij")
    wgrid = w
    for _ in range(n - 1):
        wgrid = np.multiply.outer(wgrid, w)
    return np.stack([g.ravel() for g in grids], axis=-1), np.asarray(wgrid).ravel()


def overlap_pairs(kernel, domain, inner_order, z_order=None, rows=200000):
    """Node pairs ``(x, x + z)`` for ``iint_{Omega x Omega} J(x - y) F(x, y)``.

    ``z = y - x`` runs over :func:`band.difference_rule` and, for each
    pair of boxes ``(i, j)``, ``x`` over a tensor Gauss rule of
    ``inner_order`` points per axis on ``box_i`` intersected with
    ``box_j - z``.  The rule is exact in ``x`` for polynomials of degree
    ``2 inner_order - 1`` per axis.  Yields ``(x, ids_x, y, ids_y,
    weights)`` batches of at most about ``rows`` nodes, the weights
    including ``J(z)``.
    """
    n = domain.dimension
    zrule = _band.difference_rule(kernel, domain, domain, z_order)
    if zrule is None:
        return
    zw = zrule.weights * kernel(zrule.nodes)
    unit, uw = _unit_tensor(inner_order, n)
    step = max(1, rows // unit.shape[0])
    lo_all, hi_all = domain.lower, domain.upper
    for i in range(lo_all.shape[0]):
        for j in range(lo_all.shape[0]):
            for start in range(0, zrule.size, step):
                z = zrule.nodes[start:start + step]
                lo = np.maximum(lo_all[i], lo_all[j] - z)
                hi = np.minimum(hi_all[i], hi_all[j] - z)
                width = hi - lo
                live = np.all(width > 0, axis=1)
                if not np.any(live):
                    continue
                z, lo, width = z[live], lo[live], width[live]
                x = (lo[:, None, :] + width[:, None, :] * unit[None, :, :]).reshape(-1, n)
                y = x + np.repeat(z, unit.shape[0], axis=0)
                w = ((zw[start:start + step][live] * np.prod(width, axis=1))[:, None] * uw[None, :]).ravel()
                yield x, np.full(x.shape[0], i), y, np.full(x.shape[0], j), w


def overlap_order(domain, N, kind="broken"):
    """``(inner_order, z_order)`` that integrate degree-``N`` basis products exactly in ``x``."""
    deg = max_degree(domain, N, kind)
    n = domain.dimension
    if n == 1:
        return deg + 1, _band.LOCAL_ORDER[1] + deg + 1
    # measured: this z order settles 2-D entries to about 1e-14
    base = _band.POLAR_ORDER if n == 2 else _band.LOCAL_ORDER[n]
    return deg + 1, base + deg // 2 + 2


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    """Assembled ``A``, ``B`` and ``M = A - B`` for a basis.

    ``symmetry_defect`` is the largest asymmetry of ``A`` and ``B`` before
    they were symmetrized; ``constant_defect`` is ``||M e_0||``.
    """

    kernel: object
    domain: object
    basis: Basis
    A: SymMatrix
    B: SymMatrix
    M: SymMatrix
    b_nodes: np.ndarray
    symmetry_defect: float
    constraint_count: int = 1
    method: str = "product"

    @property
    def N(self):
        return self.basis.N

    @property
    def constant_defect(self):
        return float(np.linalg.norm(self.M.dense()[:, 0]))

    def truncate(self, N):
        """System of the nested basis ``phi_0 .. phi_N`` (principal blocks)."""
        m = N + 1
        A, B = self.A.principal(m), self.B.principal(m)
        return GalerkinSystem(self.kernel, self.domain, self.basis.truncate(N), A, B, A - B,
                              self.b_nodes, self.symmetry_defect, self.constraint_count, self.method)


def assemble(kernel, domain, basis, method=None, sampler=None):
    """Assemble ``A``, ``B`` and ``M = A - B``.

    Parameters
    ----------
    kernel : Kernel
    domain : Domain
    basis : Basis
    method : {"overlap", "adaptive", "product"}, optional
        ``"overlap"`` (the default) writes both double integrals in
        ``z = y - x``: the inner integral over the box intersections is a
        polynomial integral done exactly (:func:`overlap_pairs`), and the
        outer one uses the kernel-adapted rule in ``z``.  ``"product"`` sums ``J(x_i - x_j)`` over the basis' own product
        rule, which is exact in structure (``M e_0 = 0``, symmetry) but
        only as accurate as a tensor rule is for a kink or cusp of ``J``.
        ``"adaptive"`` integrates ``L phi_l`` with kernel-adapted local
        rules (:class:`OperatorSampler`) and tests it against ``phi_k`` on
        the outer rule.
    sampler : OperatorSampler, optional
        Reused for the adaptive method.

    Returns
    -------
    GalerkinSystem
    """
    _band._check(kernel, domain)
    if method is None:
        method = "overlap"
    if method == "overlap":
        inner_order, z_order = overlap_order(domain, basis.N, basis.kind)
        m = basis.size
        a, bm = np.zeros((m, m)), np.zeros((m, m))
        for x, ix, y, iy, w in overlap_pairs(kernel, domain, inner_order, z_order):
            px, py = basis(x, ix), basis(y, iy)
            wpx = w[:, None] * px
            a += wpx.T @ py
            bm += wpx.T @ px
        b_nodes = None
    elif method == "adaptive":
        sampler = adaptive_sampler(kernel, domain, basis.N, basis.kind) if sampler is None else sampler
        lphi, phix = sampler.basis_images(basis)
        wphi = sampler.rule.weights[:, None] * phix
        bm = wphi.T @ (sampler.b[:, None] * phix)
        a = wphi.T @ lphi + bm
        b_nodes = sampler.b
    elif method == "product":
        rule = basis.rule
        x, w = rule.nodes, rule.weights
        kmat = kernel_matrix(kernel, x)
        phi = basis(x, rule.box_ids)
        wphi = w[:, None] * phi
        b_nodes = kmat @ w
        a = wphi.T @ kmat @ wphi
        bm = wphi.T @ (b_nodes[:, None] * phi)
    else:
        raise InvalidInputError(f"unknown assembly method {method!r}")
    A = SymMatrix.from_dense(a)
    B = SymMatrix.from_dense(bm)
    return GalerkinSystem(kernel, domain, basis, A, B, A - B, b_nodes,
                          max(A.symmetry_defect, B.symmetry_defect), method=method)


class OperatorSampler:
    """Applies ``L`` by direct integration on a kernel-adapted outer rule.

    In one dimension the outer rule is split where ``x +- r`` meets a
    face; in two and three dimensions a plain tensor rule is used to keep
    the cost bounded.  The inner integrals use
    :func:`band.local_kernel_rule` around each outer node.
    """

    def __init__(self, kernel, domain, order=None, panels=1, chunk=64, inner_order=None):
        _band._check(kernel, domain)
        self.kernel = kernel
        self.domain = domain
        # residuals need far less than machine precision; 8 keeps 2-D cost bounded
        if inner_order is None and domain.dimension == 2:
            inner_order = 8
        self.inner_order = inner_order
        if domain.dimension == 1:
            self.rule = _band.outer_rule(kernel, domain, order)
        else:
            self.rule = quadrature.tensor_rule(domain, order or 12, panels=panels)
        self.chunk = chunk
        self._images = {}
        self.b = self._integrate_rows(lambda y: np.ones((y.shape[0], 1)))[:, 0]

    def _integrate_rows(self, fn):
        """``int_Omega J(x_i - y) fn(y) dy`` for every outer node; ``fn`` returns ``(m, q)``."""
        x = self.rule.nodes
        rows = []
        for start in range(0, x.shape[0], self.chunk):
            ys, kws, seg = [], [], []
            for xi in x[start:start + self.chunk]:
                r = _band.local_kernel_rule(self.kernel, self.domain, xi, self.inner_order)
                ys.append(r.nodes)
                kws.append(r.weights * self.kernel(xi[None, :] - r.nodes))
                seg.append(r.size)
            vals = np.asarray(fn(np.concatenate(ys)), dtype=float)
            vals = vals.reshape(vals.shape[0], -1)
            weighted = np.concatenate(kws)[:, None] * vals
            offsets = np.concatenate([[0], np.cumsum(seg)[:-1]])
            rows.append(np.add.reduceat(weighted, offsets, axis=0))
        return np.concatenate(rows)

    def apply(self, fn):
        """``(L f)`` at the outer nodes for ``f`` returning ``(m,)`` or ``(m, q)`` values."""
        fx = np.asarray(fn(self.rule.nodes), dtype=float)
        fx = fx.reshape(fx.shape[0], -1)
        return self._integrate_rows(fn) - self.b[:, None] * fx

    def basis_images(self, basis):
        """``(L phi_j, phi_j)`` at the outer nodes, shared across truncations."""
        root = basis.root if basis.root is not None else basis
        key = id(root)
        if key not in self._images:
            phix = root(self.rule.nodes)
            self._images[key] = (self.apply(root), phix, root)
        lphi, phix, _ = self._images[key]
        return lphi[:, : basis.size], phix[:, : basis.size]

    def operator_form(self, basis):
        """``G[k, l] = <L phi_l, phi_k>`` with ``L phi_l`` integrated directly."""
        lphi, phix = self.basis_images(basis)
        return phix.T @ (self.rule.weights[:, None] * lphi)

    def dirichlet_form(self, basis):
        """``D[k, l] = -1/2 iint J (phi_k(x) - phi_k(y)) (phi_l(x) - phi_l(y))`` on the nested rule."""
        x, w = self.rule.nodes, self.rule.weights
        phix = basis(x)
        out = np.zeros((basis.size, basis.size))
        for start in range(0, x.shape[0], self.chunk):
            rules = [_band.local_kernel_rule(self.kernel, self.domain, xi, self.inner_order)
                     for xi in x[start:start + self.chunk]]
            phiy = basis(np.concatenate([r.nodes for r in rules]))
            pos = 0
            for i, r in enumerate(rules):
                xi = x[start + i]
                kw = r.weights * self.kernel(xi[None, :] - r.nodes)
                dif = phix[start + i][None, :] - phiy[pos:pos + r.size]
                out += w[start + i] * (dif.T * kw) @ dif
                pos += r.size
        return -0.5 * out

    def norm(self, values):
        return math.sqrt(max(self.rule.integrate(values * values), 0.0))


def adaptive_sampler(kernel, domain, N, kind="broken"):
    """Sampler whose outer rule integrates products of the basis exactly on every panel."""
    order = max(_band.LOCAL_ORDER[domain.dimension], max_degree(domain, N, kind) + 1)
    return OperatorSampler(kernel, domain, order=order)


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Galerkin eigenpair ``(beta_k^N, v_k^N)``.

    ``coefficients`` are with respect to the basis; for ``k >= 1`` the
    leading entry is zero.  ``residual`` is ``||L v - beta v||_{L^2}``
    with ``L`` applied by direct integration (``nan`` if not computed).
    """

    index: int
    value: float
    coefficients: np.ndarray
    residual: float
    multiplicity: int
    basis: Basis = field(repr=False)

    def __call__(self, points):
        return self.basis(points) @ self.coefficients


def solve(system, k_max, sampler=None, residuals=True):
    """Eigenpairs ``k = 0 .. k_max`` of the constrained Galerkin problem.

    The trivial pair ``k = 0`` is the constant function with value
    ``M[0, 0]``.  For ``k >= 1`` the pairs are the leading eigenpairs of
    ``M`` with its first row and column removed, embedded with ``c_0 = 0``.

    Parameters
    ----------
    system : GalerkinSystem
    k_max : int
        Number of non-trivial pairs, at most ``N``.
    sampler : OperatorSampler, optional
        Reused across calls to avoid recomputing direct operator images.
    residuals : bool
        Compute residual norms.

    Returns
    -------
    list of EigenPair
    """
    N = system.N
    if not 0 <= k_max <= N:
        raise InvalidInputError(f"k_max={k_max} must be between 0 and N={N}")
    m = system.M
    dec = eigh(restrict(m, system.constraint_count))
    vals, vecs = dec.eigenvalues, dec.eigenvectors
    coeffs = [np.eye(N + 1)[0]]
    values = [float(m[0, 0])]
    mult = [1]
    for k in range(k_max):
        c = np.concatenate([[0.0], vecs[:, k]])
        coeffs.append(c)
        values.append(float(vals[k]))
        mult.append(int(np.sum(np.abs(vals - vals[k]) <= MULTIPLICITY_TOL * max(1.0, abs(vals[k])))))
    res = [math.nan] * len(coeffs)
    if residuals:
        if sampler is None:
            sampler = OperatorSampler(system.kernel, system.domain)
        lphi, phix = sampler.basis_images(system.basis)
        for k, c in enumerate(coeffs):
            res[k] = sampler.norm(lphi @ c - values[k] * (phix @ c))
    return [EigenPair(k, values[k], coeffs[k], res[k], mult[k], system.basis) for k in range(len(coeffs))]


@dataclass
class ConvergenceRow:
    N: int
    k: int
    beta: float
    residual: float
    margin: float
    multiplicity: int


@dataclass
class ConvergenceTable:
    """Sweep over ``N``: eigenvalues, residuals, margins and eigenfunction increments.

    ``increments`` maps ``(N, N_next, k)`` to the sign-aligned ``L^2``
    distance between successive eigenfunctions (sine of the largest
    principal angle for repeated eigenvalues).  ``violations`` lists
    ``(k, N, N_next, beta, beta_next)`` where the eigenvalue decreased by
    more than the slack.
    """

    sup_sigma_c: float
    rows: list
    increments: dict
    violations: list
    pairs: dict
    band: object = None
    system: object = None

    @property
    def monotone(self):
        return not self.violations

    def beta(self, k):
        """``beta_k^N`` for every ``N`` in the sweep."""
        return np.array([r.beta for r in self.rows if r.k == k])

    def residual(self, k):
        return np.array([r.residual for r in self.rows if r.k == k])

    def margin(self, k):
        return np.array([r.margin for r in self.rows if r.k == k])

    @property
    def N_list(self):
        return sorted({r.N for r in self.rows})


def _pad(c, size):
    out = np.zeros(size)
    out[: c.size] = c
    return out


def _increment(pairs_a, pairs_b, k):
    size = pairs_b[k].coefficients.size
    vb = pairs_b[k].value
    tol = MULTIPLICITY_TOL * max(1.0, abs(vb))
    group = [j for j in range(1, len(pairs_b)) if abs(pairs_b[j].value - vb) <= tol] if k else [0]
    if len(group) == 1:
        dot = float(_pad(pairs_a[k].coefficients, size) @ pairs_b[k].coefficients)
        return math.sqrt(max(0.0, 2.0 - 2.0 * abs(dot)))
    ua = np.column_stack([_pad(pairs_a[j].coefficients, size) for j in group if j < len(pairs_a)])
    ub = np.column_stack([pairs_b[j].coefficients for j in group])
    s = np.linalg.svd(ua.T @ ub, compute_uv=False)
    return math.sqrt(max(0.0, 1.0 - float(s.min()) ** 2))


def converge(kernel, domain, N_list, k_max, order=None, kind="broken", panels=1,
             spectrum=None, sampler=None, residuals=True, method=None):
    """Galerkin sweep over increasing basis orders.

    One basis of order ``max(N_list)`` is built and assembled; each ``N``
    uses its leading block, so the nested-subspace monotonicity of the
    eigenvalues is checked on exactly nested problems.

    Parameters
    ----------
    kernel : Kernel
    domain : Domain
    N_list : sequence of int
        Strictly increasing basis orders.
    k_max : int
        Number of non-trivial eigenpairs per order.
    order, kind, panels
        Passed to :func:`build_basis`.
    method : str, optional
        Assembly method, see :func:`assemble`.
    spectrum : SpectralBand, optional
        Precomputed continuous spectrum.
    sampler : OperatorSampler, optional
    residuals : bool

    Returns
    -------
    ConvergenceTable
    """
    N_list = [int(N) for N in N_list]
    if not N_list or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise InvalidInputError("N_list must be non-empty and strictly increasing")
    if k_max > N_list[0]:
        raise InvalidInputError(f"k_max={k_max} exceeds the smallest N={N_list[0]}")
    if method is None:
        method = "overlap"
    if method == "adaptive":
        if sampler is None:
            sampler = adaptive_sampler(kernel, domain, N_list[-1], kind)
        basis = build_basis(domain, N_list[-1], kind=kind, rule=sampler.rule)
    else:
        basis = build_basis(domain, N_list[-1], order=order, kind=kind, panels=panels)
        if residuals and sampler is None:
            sampler = OperatorSampler(kernel, domain)
    system = assemble(kernel, domain, basis, method, sampler)
    spectrum = _band.continuous_spectrum(kernel, domain) if spectrum is None else spectrum
    rows, pairs = [], {}
    for N in N_list:
        sub = system.truncate(N)
        pairs[N] = solve(sub, k_max, sampler, residuals)
        for p in pairs[N]:
            rows.append(ConvergenceRow(N, p.index, p.value, p.residual,
                                       p.value - spectrum.sup_sigma_c, p.multiplicity))
    increments, violations = {}, []
    for a, b in zip(N_list, N_list[1:]):
        for k in range(k_max + 1):
            ba, bb = pairs[a][k].value, pairs[b][k].value
            if bb < ba - MONOTONE_SLACK:
                violations.append((k, a, b, ba, bb))
            increments[(a, b, k)] = _increment(pairs[a], pairs[b], k)
    return ConvergenceTable(spectrum.sup_sigma_c, rows, increments, violations, pairs, spectrum, system)


def apply_operator(kernel, domain, v, order=None):
    """``x -> int_Omega J(x - y) v(y) dy - b(x) v(x)`` by direct integration.

    ``v`` maps ``(m, n)`` points to ``m`` values; so does the result.
    """
    _band._check(kernel, domain)

    def lv(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vx = np.asarray(v(pts), dtype=float).reshape(-1)
        out = np.empty(pts.shape[0])
        for i, x in enumerate(pts):
            rule = _band.local_kernel_rule(kernel, domain, x, order)
            kw = rule.weights * kernel(x[None, :] - rule.nodes)
            out[i] = math.fsum(kw * (np.asarray(v(rule.nodes), dtype=float).reshape(-1) - vx[i]))
        return out

    return lv


def inner(u, w, rule):
    return rule.integrate(np.asarray(u(rule.nodes)).reshape(-1) * np.asarray(w(rule.nodes)).reshape(-1))


def energy(kernel, domain, v, rule=None):
    """``<L v, v>`` from the operator form.

    With ``rule=None`` ``L v`` is integrated directly (kernel-adapted
    local rules) and the outer integral uses :func:`band.outer_rule`.
    With a rule, everything is summed on that rule's product grid.
    """
    if rule is None:
        outer = _band.outer_rule(kernel, domain)
        vx = np.asarray(v(outer.nodes), dtype=float).reshape(-1)
        return outer.integrate(apply_operator(kernel, domain, v)(outer.nodes) * vx)
    vx = np.asarray(v(rule.nodes), dtype=float).reshape(-1)
    kmat = kernel_matrix(kernel, rule.nodes)
    w = rule.weights
    lv = kmat @ (w * vx) - (kmat @ w) * vx
    return rule.integrate(lv * vx)


def dirichlet_energy(kernel, domain, v, rule=None, inner_order=16, z_order=None):
    """``-1/2 iint J(x - y) (v(x) - v(y))^2``, the symmetrized form of ``<L v, v>``.

    ``rule=None`` writes the double integral in ``z = y - x`` with
    :func:`overlap_pairs`; that is exact in ``x`` when ``v`` is a
    polynomial of degree below ``inner_order`` on each box.  With a rule
    the double sum runs over its product grid.

    Without a rule ``v`` may return ``(m, q)`` values for ``q`` functions
    at once; the result is then an array of ``q`` energies.
    """
    if rule is None:
        total, multi = 0.0, False
        for x, _, y, _, w in overlap_pairs(kernel, domain, inner_order, z_order):
            vy, vx = np.asarray(v(y), dtype=float), np.asarray(v(x), dtype=float)
            multi = vx.ndim > 1
            d = (vy - vx).reshape(vx.shape[0], -1)
            total = total + w @ (d * d)
        total = -0.5 * np.asarray(total)
        return total if multi else float(total.reshape(-1)[0])
    vx = np.asarray(v(rule.nodes), dtype=float).reshape(-1)
    kmat = kernel_matrix(kernel, rule.nodes)
    w = rule.weights
    diff2 = (vx[:, None] - vx[None, :]) ** 2
    rows = (kmat * diff2) @ w
    return -0.5 * rule.integrate(rows)
