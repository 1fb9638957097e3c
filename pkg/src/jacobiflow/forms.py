"""Canonical bilinear forms on extended phase space and Jacobian plumbing.

Extended phase space has coordinates z = (q1, p1, ..., qn, pn, eps, t) in
R^(2n+2): each position is interleaved with its momentum, followed by the
energy coordinate and time.  This interleaved ordering is the one canonical
ordering used everywhere in the package; `block_permutation` converts to the
block view (q, p, eps, t) when that reads better.

Two structures live on this space: the symplectic form with matrix zeta
(n+1 diagonal 2x2 blocks [[0,1],[-1,0]], the last acting on (eps, t)) and
the degenerate time metric with matrix eta (a single 1 in the (t, t) entry).
Invariance of either under a map is measured by `form_residual` applied to
the map's Jacobian.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Default tolerances: exact matrix algebra vs finite-difference checks.
TOL_EXACT = 1e-12
TOL_FD = 1e-6


def _freeze(a):
    # read-only copy; values are immutable after construction
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dimension:
    """Number of position degrees of freedom; sizes derive from it."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.n!r}")

    @property
    def reduced(self):
        return 2 * self.n

    @property
    def extended(self):
        return 2 * self.n + 2


def as_dimension(n):
    return n if isinstance(n, Dimension) else Dimension(int(n))


class FormKind(Enum):
    SYMPLECTIC = "symplectic"
    DEGENERATE_ORTHOGONAL = "degenerate_orthogonal"


@dataclass(frozen=True)
class BilinearForm:
    kind: FormKind
    matrix: np.ndarray
    n: Dimension

    def __post_init__(self):
        object.__setattr__(self, "matrix", _freeze(self.matrix))


@dataclass(frozen=True)
class PhasePoint:
    """A point z = (q, p, eps, t) of extended phase space."""

    q: np.ndarray
    p: np.ndarray
    eps: float
    t: float
    n: Dimension = field(init=False)

    def __post_init__(self):
        q = _freeze(np.atleast_1d(self.q))
        p = _freeze(np.atleast_1d(self.p))
        if q.shape != p.shape or q.ndim != 1:
            raise ValueError("q and p must be 1-d arrays of equal length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "n", Dimension(len(q)))
        z = self.to_array()
        if not np.all(np.isfinite(z)):
            raise ValueError("phase point has non-finite entries")

    def to_array(self):
        """Canonical flattening (q1, p1, ..., qn, pn, eps, t)."""
        z = np.empty(self.n.extended)
        z[0 : 2 * self.n.n : 2] = self.q
        z[1 : 2 * self.n.n : 2] = self.p
        z[-2] = self.eps
        z[-1] = self.t
        return z

    @classmethod
    def from_array(cls, z):
        z = np.asarray(z, dtype=float)
        if z.ndim != 1 or len(z) < 4 or len(z) % 2:
            raise ValueError(f"expected a vector of even length >= 4, got shape {z.shape}")
        return cls(q=z[0:-2:2], p=z[1:-2:2], eps=z[-2], t=z[-1])


@dataclass(frozen=True)
class MapHandle:
    """An evaluable map on extended phase space, with optional analytic Jacobian."""

    func: object
    n: Dimension
    jacobian: object = None
    name: str = ""

    def __call__(self, z):
        return np.asarray(self.func(np.asarray(z, dtype=float)), dtype=float)


def canonical_zeta(n):
    """Canonical symplectic matrix on R^(2n+2).

    Parameters
    ----------
    n : int or Dimension
        Position degrees of freedom.

    Returns
    -------
    BilinearForm
        (2n+2)-dimensional matrix of n+1 diagonal blocks [[0, 1], [-1, 0]];
        the final block acts on (eps, t) and the top-left 2n x 2n block is
        the reduced symplectic matrix zeta°.
    """
    n = as_dimension(n)
    m = np.zeros((n.extended, n.extended))
    for k in range(n.n + 1):
        m[2 * k, 2 * k + 1] = 1.0
        m[2 * k + 1, 2 * k] = -1.0
    return BilinearForm(kind=FormKind.SYMPLECTIC, matrix=m, n=n)


def canonical_eta(n):
    """Degenerate time metric on R^(2n+2): zeros except eta[t, t] = 1."""
    n = as_dimension(n)
    m = np.zeros((n.extended, n.extended))
    m[-1, -1] = 1.0
    return BilinearForm(kind=FormKind.DEGENERATE_ORTHOGONAL, matrix=m, n=n)


def zeta_reduced(n):
    """Reduced symplectic matrix zeta° on R^(2n) (interleaved pairs)."""
    n = as_dimension(n)
    return canonical_zeta(n).matrix[: n.reduced, : n.reduced].copy()


def form_matrix(F):
    return F.matrix if isinstance(F, BilinearForm) else np.asarray(F, dtype=float)


def form_residual(M, F):
    """Max-absolute-entry norm of M^T F M - F.

    Membership in the invariance group of F is residual <= tol.  F may be a
    BilinearForm or a plain matrix.
    """
    M = np.asarray(M, dtype=float)
    F = form_matrix(F)
    if M.shape != F.shape or M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"shape mismatch: M {M.shape} vs form {F.shape}")
    return float(np.max(np.abs(M.T @ F @ M - F)))


def block_permutation(n):
    """Permutation matrix P with z_block = P @ z_interleaved.

    Block ordering is (q1..qn, p1..pn, eps, t); P is orthogonal, so the
    inverse conversion is P.T.
    """
    n = as_dimension(n)
    P = np.zeros((n.extended, n.extended))
    for i in range(n.n):
        P[i, 2 * i] = 1.0
        P[n.n + i, 2 * i + 1] = 1.0
    P[-2, -2] = 1.0
    P[-1, -1] = 1.0
    return P


def interleaved_to_block(z):
    """Reorder a state vector (or each row of a matrix of states) to (q, p, eps, t)."""
    z = np.asarray(z)
    n = (z.shape[-1] - 2) // 2
    idx = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2)) + [2 * n, 2 * n + 1]
    return z[..., idx]


def block_to_interleaved(z):
    z = np.asarray(z)
    n = (z.shape[-1] - 2) // 2
    idx = np.empty(2 * n + 2, dtype=int)
    idx[0 : 2 * n : 2] = np.arange(n)
    idx[1 : 2 * n : 2] = n + np.arange(n)
    idx[-2:] = (2 * n, 2 * n + 1)
    return z[..., idx]


def default_step(z):
    """Finite-difference step h = 1e-5 * max(1, |z|_inf)."""
    z = np.asarray(z, dtype=float)
    return 1e-5 * max(1.0, float(np.max(np.abs(z))) if z.size else 1.0)


def numeric_jacobian(f, z, h=None):
    """Central-difference Jacobian of a map at z.

    Parameters
    ----------
    f : MapHandle or callable
        Map R^m -> R^m on flat state vectors.
    z : PhasePoint or array
        Evaluation point.
    h : float, optional
        Step size; defaults to 1e-5 * max(1, |z|_inf).

    Returns
    -------
    ndarray
        Matrix with entry (a, d) = (f(z + h e_d)_a - f(z - h e_d)_a) / (2h).
    """
    func = f.func if isinstance(f, MapHandle) else f
    z = z.to_array() if isinstance(z, PhasePoint) else np.asarray(z, dtype=float)
    if h is None:
        h = default_step(z)
    if h <= 0:
        raise ValueError("step size must be positive")
    m = len(z)
    J = np.empty((m, m))
    for d in range(m):
        e = np.zeros(m)
        e[d] = h
        fp = np.asarray(func(z + e), dtype=float)
        fm = np.asarray(func(z - e), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise ValueError(f"map evaluated to non-finite values near column {d}")
        J[:, d] = (fp - fm) / (2.0 * h)
    return J
