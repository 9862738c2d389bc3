"""Affine subspaces, orthogonal projections, Grassmannian angles and
Gram-Schmidt with coefficient tracking.

All objects here are immutable; arrays handed out are read-only views.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, DimMismatch, TooSteep

ORTHO_TOL = 1e-10
STEEP_MARGIN = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _orthonormal_complement(basis, N):
    """Orthonormal rows spanning the orthogonal complement of ``basis``."""
    m = basis.shape[0]
    if m == 0:
        return np.eye(N)
    # full SVD gives a deterministic completion
    _, _, vt = np.linalg.svd(basis, full_matrices=True)
    return vt[m:].copy()


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """An affine subspace ``base + span(basis)`` of R^N.

    Parameters
    ----------
    base : array_like, shape (N,)
        Any point of the subspace.
    basis : array_like, shape (m, N)
        Orthonormal rows. ``m = 0`` describes the single point ``base``.
    normal : array_like, shape (N - m, N), optional
        Orthonormal complement, if already known (e.g. from an
        eigendecomposition). Distances are then measured along it.
    """

    base: np.ndarray
    basis: np.ndarray
    normal: np.ndarray = None

    def __post_init__(self):
        base = _frozen(self.base).reshape(-1)
        basis = _frozen(self.basis)
        if basis.size == 0:
            basis = _frozen(np.zeros((0, base.shape[0])))
        basis = basis.reshape(-1, base.shape[0])
        if not np.all(np.isfinite(base)) or not np.all(np.isfinite(basis)):
            raise DegenerateInput("non-finite subspace data")
        gram = basis @ basis.T
        if not np.allclose(gram, np.eye(basis.shape[0]), atol=ORTHO_TOL, rtol=0):
            raise DegenerateInput("basis rows are not orthonormal")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "basis", basis)
        if self.normal is not None:
            normal = _frozen(self.normal).reshape(-1, base.shape[0])
            full = np.vstack([basis, normal])
            if full.shape[0] != base.shape[0] or not np.allclose(
                full @ full.T, np.eye(base.shape[0]), atol=ORTHO_TOL, rtol=0
            ):
                raise DegenerateInput("normal rows do not complete the basis")
            object.__setattr__(self, "normal", normal)

    @classmethod
    def from_directions(cls, base, directions):
        """Build from a base point and any linearly independent spanning set."""
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        base = np.asarray(base, dtype=float).reshape(-1)
        if directions.size == 0:
            return cls(base, np.zeros((0, base.shape[0])))
        q, r = np.linalg.qr(directions.T)
        d = np.abs(np.diag(r))
        if d.min() <= ORTHO_TOL * max(d.max(), 1.0):
            raise DegenerateInput("spanning directions are linearly dependent")
        return cls(base, q.T)

    @classmethod
    def coordinate(cls, N, axes, base=None):
        """Coordinate subspace spanned by the listed axes."""
        basis = np.eye(N)[list(axes)]
        return cls(np.zeros(N) if base is None else base, basis)

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def ambient_dim(self):
        return self.base.shape[0]

    @property
    def is_full(self):
        return self.dim == self.ambient_dim

    def projector(self):
        """Orthogonal projector onto the parallel linear subspace."""
        return self.basis.T @ self.basis

    def normal_basis(self):
        """Orthonormal rows spanning the orthogonal complement."""
        if self.normal is not None:
            return self.normal
        return _orthonormal_complement(self.basis, self.ambient_dim)

    def coords(self, x):
        """Coordinates of the projection of ``x`` in the subspace basis."""
        x = np.asarray(x, dtype=float)
        return (x - self.base) @ self.basis.T

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return self.base + self.coords(x) @ self.basis

    def distance(self, x):
        x = np.asarray(x, dtype=float)
        if self.normal is not None:
            return np.linalg.norm((x - self.base) @ self.normal.T, axis=-1)
        return np.linalg.norm(x - self.project(x), axis=-1)

    def contains(self, x, tol=1e-10):
        return bool(np.all(self.distance(x) <= tol))

    def point(self, u):
        """Point with subspace coordinates ``u``."""
        return self.base + np.asarray(u, dtype=float) @ self.basis

    def translated(self, v):
        return AffineSubspace(self.base + np.asarray(v, dtype=float), self.basis, self.normal)

    def through_origin(self):
        """The parallel linear subspace."""
        return AffineSubspace(np.zeros(self.ambient_dim), self.basis, self.normal)

    def __repr__(self):
        return f"AffineSubspace(dim={self.dim}, N={self.ambient_dim})"


def project(P, x):
    """Orthogonal projection of ``x`` onto ``P``.

    Parameters
    ----------
    P : AffineSubspace
    x : array_like, shape (N,) or (k, N)
    """
    return P.project(x)


def dist_to_subspace(x, P):
    """Euclidean distance from ``x`` to the affine subspace ``P``."""
    return P.distance(x)


def affine_hull(points, rank_tol=None):
    """Numerical affine hull of a point set.

    Points are added by farthest-distance pivoting: the next direction is
    the point farthest from the current flat, accepted while that distance
    exceeds ``rank_tol``. Hence every input point ends within ``rank_tol``
    of the result and the dimension is the pivoted numerical rank.

    Parameters
    ----------
    points : array_like, shape (k, N)
    rank_tol : float, optional
        Defaults to ``1e-8 * max |p|`` (or ``1e-8`` for points at the origin).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise DegenerateInput("empty point list")
    N = pts.shape[1]
    if rank_tol is None:
        rank_tol = 1e-8 * max(float(np.max(np.linalg.norm(pts, axis=1))), 1.0)
    base = pts[0]
    basis = np.zeros((0, N))
    resid = pts - base
    while basis.shape[0] < N:
        d = np.linalg.norm(resid, axis=1)
        j = int(np.argmax(d))
        if d[j] <= rank_tol:
            break
        o = resid[j] / d[j]
        # re-orthogonalise against the existing basis once more
        o = o - (o @ basis.T) @ basis
        o /= np.linalg.norm(o)
        basis = np.vstack([basis, o])
        resid = resid - np.outer(resid @ o, o)
    return AffineSubspace(base, basis)


def gram_schmidt_tracked(vectors, tol=1e-10):
    """Gram-Schmidt orthonormalisation that records the coefficients.

    Returns the orthonormal vectors ``o_l`` together with the lower
    triangular matrix ``gamma`` satisfying ``o_l = sum_{r<=l} gamma[l, r] v_r``.

    The recursion is ``gamma[0,0] = 1/|v_0|``,
    ``gamma[l,l] = 1/|v_l - sum_i <v_l,o_i> o_i|`` and
    ``gamma[l,r] = -gamma[l,l] * sum_{i=r}^{l-1} <v_l,o_i> gamma[i,r]``.

    Raises
    ------
    DegenerateInput
        If a residual falls below ``tol`` relative to the input norm.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    k = V.shape[0]
    O = np.zeros_like(V)
    gamma = np.zeros((k, k))
    for l in range(k):
        v = V[l]
        proj = O[:l] @ v
        r = v - proj @ O[:l]
        # a second pass removes the roundoff left by the first
        corr = O[:l] @ r
        r = r - corr @ O[:l]
        proj = proj + corr
        nr = np.linalg.norm(r)
        if nr <= tol * max(np.linalg.norm(v), 1e-300) or nr == 0.0:
            raise DegenerateInput(f"vector {l} is dependent on its predecessors")
        g = 1.0 / nr
        O[l] = r * g
        gamma[l, l] = g
        for rr in range(l):
            gamma[l, rr] = -g * np.dot(proj[rr:l], gamma[rr:l, rr])
    return O, gamma


def angle(P1, P2):
    """Operator-norm angle between the parallel linear parts of two flats.

    Returns a value in ``[0, 1]``; for two lines it equals the sine of the
    angle between them.
    """
    if P1.dim != P2.dim or P1.ambient_dim != P2.ambient_dim:
        raise DimMismatch(f"dims {P1.dim}/{P1.ambient_dim} vs {P2.dim}/{P2.ambient_dim}")
    if P1.dim == 0:
        return 0.0
    diff = P1.projector() - P2.projector()
    val = float(np.linalg.norm(diff, 2))
    return min(max(val, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class AffineMap:
    """Affine map ``a : G -> G^perp`` in coordinates.

    For ``u`` in G-coordinates the image has G^perp-coordinates
    ``u @ linear + offset``. ``domain`` and ``codomain_basis`` fix the
    coordinate systems; ``origin`` is the base point of G.
    """

    linear: np.ndarray  # (m, N - m)
    offset: np.ndarray  # (N - m,)
    domain: AffineSubspace
    codomain_basis: np.ndarray  # (N - m, N)

    def __post_init__(self):
        object.__setattr__(self, "linear", _frozen(self.linear))
        object.__setattr__(self, "offset", _frozen(self.offset))
        object.__setattr__(self, "codomain_basis", _frozen(self.codomain_basis))

    @property
    def lipschitz(self):
        if self.linear.size == 0:
            return 0.0
        return float(np.linalg.norm(self.linear, 2))

    def coords(self, u):
        return np.asarray(u, dtype=float) @ self.linear + self.offset

    def __call__(self, u):
        """Image as an ambient vector lying in G^perp."""
        return self.coords(u) @ self.codomain_basis

    def graph_point(self, u):
        return self.domain.point(u) + self(u)


def plane_as_graph(P, G):
    """Write the flat ``P`` as the graph of an affine map over ``G``.

    Parameters
    ----------
    P, G : AffineSubspace
        Flats of equal dimension.

    Returns
    -------
    AffineMap
        ``a`` with ``{g + a(g) : g in G} = P``. Its Lipschitz constant is at
        most ``angle(P, G) / (1 - angle(P, G))``.

    Raises
    ------
    TooSteep
        If ``angle(P, G) >= 1 - 1e-9``.
    """
    ang = angle(P, G)
    if ang >= 1.0 - STEEP_MARGIN:
        raise TooSteep(f"angle {ang:.6g} too close to 1")
    Bg = G.basis
    Bperp = G.normal_basis()
    off = P.base - G.base
    M = P.basis @ Bg.T  # (m, m)
    Q = P.basis @ Bperp.T  # (m, N - m)
    u_p = off @ Bg.T
    w_p = off @ Bperp.T
    linear = np.linalg.solve(M, Q)
    offset = w_p - u_p @ linear
    return AffineMap(linear, offset, G, Bperp)
