"""Dense symmetric matrices and a cyclic Jacobi eigensolver.

The solver sweeps off-diagonal pairs in round-robin (tournament) order: each
round rotates ``floor(n/2)`` disjoint pairs at once, and ``n - 1`` rounds
visit every pair exactly once, so one round-robin pass is one cyclic sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, InvalidInputError

MAX_SWEEPS = 100
OFFDIAG_TOL = 1e-12


class SymMatrix:
    """Symmetric matrix kept as its packed lower triangle.

    Build from a dense array with :meth:`from_dense`, which averages the
    array with its transpose and records the asymmetry it removed.
    """

    __slots__ = ("size", "entries", "symmetry_defect")

    def __init__(self, size, entries, symmetry_defect=0.0):
        entries = np.asarray(entries, dtype=float)
        if entries.shape != (size * (size + 1) // 2,):
            raise InvalidInputError("packed storage has the wrong length")
        if not np.all(np.isfinite(entries)):
            raise InvalidInputError("matrix entries must be finite")
        self.size = int(size)
        self.entries = entries
        self.symmetry_defect = float(symmetry_defect)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
        defect = float(np.max(np.abs(a - a.T))) if a.size else 0.0
        sym = 0.5 * (a + a.T)
        rows, cols = np.tril_indices(a.shape[0])
        return cls(a.shape[0], sym[rows, cols], defect)

    def dense(self):
        out = np.zeros((self.size, self.size))
        rows, cols = np.tril_indices(self.size)
        out[rows, cols] = self.entries
        out[cols, rows] = self.entries
        return out

    def __getitem__(self, ij):
        i, j = ij
        if i < j:
            i, j = j, i
        return self.entries[i * (i + 1) // 2 + j]

    def __sub__(self, other):
        return SymMatrix(self.size, self.entries - other.entries, max(self.symmetry_defect, other.symmetry_defect))

    def __add__(self, other):
        return SymMatrix(self.size, self.entries + other.entries, max(self.symmetry_defect, other.symmetry_defect))

    def __matmul__(self, v):
        return self.dense() @ v

    def principal(self, m):
        """Leading ``m x m`` block."""
        return SymMatrix(m, self.entries[: m * (m + 1) // 2], self.symmetry_defect)

    def frobenius(self):
        return float(np.linalg.norm(self.dense()))

    def __repr__(self):
        return f"SymMatrix(size={self.size})"


def _as_dense(m):
    if isinstance(m, SymMatrix):
        return m.dense()
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix entries must be finite")
    return 0.5 * (a + a.T)


def restrict(m, drop_first):
    """Delete the first ``drop_first`` rows and columns."""
    size = m.size if isinstance(m, SymMatrix) else np.shape(m)[0]
    if not 0 <= drop_first < size:
        raise InvalidInputError(f"cannot drop {drop_first} rows from a {size}x{size} matrix")
    a = _as_dense(m)[drop_first:, drop_first:]
    out = SymMatrix.from_dense(a)
    if isinstance(m, SymMatrix):
        out.symmetry_defect = m.symmetry_defect
    return out


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int

    def __iter__(self):
        return iter((self.eigenvalues, self.eigenvectors))


def _round_robin(n):
    """Pairings for the ``n - 1`` (or ``n``) rounds of a round-robin tournament."""
    players = list(range(n)) if n % 2 == 0 else list(range(n)) + [-1]
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0]
        rounds.append((np.array([p for p, _ in pairs], dtype=int), np.array([q for _, q in pairs], dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _off_norm(a):
    return float(np.max(np.abs(a - np.diag(np.diag(a))))) if a.shape[0] > 1 else 0.0


def eigh(m, tol=OFFDIAG_TOL, max_sweeps=MAX_SWEEPS):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the largest off-diagonal entry is below
    ``tol * ||M||_F``.  Eigenvalues are stably sorted in descending order
    and each eigenvector is signed so that its largest-magnitude entry is
    positive.

    Parameters
    ----------
    m : SymMatrix or array_like
    tol : float
    max_sweeps : int

    Returns
    -------
    EigenDecomposition

    Raises
    ------
    ConvergenceError
        If the tolerance is not met after ``max_sweeps`` sweeps.
    """
    a = _as_dense(m).copy()
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    threshold = tol * scale
    rounds = _round_robin(n) if n > 1 else []
    sweeps = 0
    while _off_norm(a) > threshold:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps", residual=_off_norm(a)
            )
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > 1e-3 * threshold
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(tau) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            t[tau == 0] = 1.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # A <- G^T A G, rows then columns; pairs are disjoint
            ap, aq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            ap, aq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = ap * c[None, :] - aq * s[None, :]
            a[:, q] = ap * s[None, :] + aq * c[None, :]
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * c[None, :] - vq * s[None, :]
            v[:, q] = vp * s[None, :] + vq * c[None, :]
        sweeps += 1
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    if n:
        lead = np.argmax(np.abs(v), axis=0)
        signs = np.sign(v[lead, np.arange(n)])
        signs[signs == 0] = 1.0
        v = v * signs[None, :]
    return EigenDecomposition(w, v, sweeps)
