"""The assembled graph map ``A : P0 -> P0^perp`` and coverage diagnostics."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..errors import OutOfDomain, ProjectionNotInjective
from ..geometry import plane_as_graph
from .stopping import LABELS
from .whitney import DOMAIN_RADIUS, select_ball, whitney_decompose

GRAPH_K = 2 * (104 * 10 * 6 + 214)
Z_TOL = 1e-12


def bump_profile(s):
    """``(1 - s^2)^3`` on ``[0, 1]``, zero beyond; C^2 at both ends."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return (1.0 - s * s) ** 3


def cube_bump(cube, u):
    """Unnormalised bump of ``cube``: 1 on ``2R``, 0 outside ``3R``.

    Uses the sup-distance ``r`` to the cube centre with
    ``s = (r - side) / (side / 2)``.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    r = np.max(np.abs(u - cube.center), axis=1)
    return bump_profile((r - cube.side) / (0.5 * cube.side))


@dataclass(eq=False)
class GraphFunction:
    """``A(a)`` = exact height over ``pi(Z)``, else ``sum phi_i A_i``.

    Values are returned as coordinates in the P0-normal basis
    (``state.P0.normal_basis()``); ``ambient`` turns them into vectors.
    """

    state: object
    cubes: list
    balls: list
    maps: list
    z_index: np.ndarray
    z_u: np.ndarray
    z_values: np.ndarray
    z_tol: float = Z_TOL

    def __post_init__(self):
        self._ztree = cKDTree(self.z_u) if len(self.z_index) else None
        if self.cubes:
            self._lo = np.array([q.lo for q in self.cubes])
            self._hi = np.array([q.hi for q in self.cubes])
            self._c = np.array([q.center for q in self.cubes])
            self._side = np.array([q.side for q in self.cubes])
            self._tree = cKDTree(self._c)
            self._reach = 1.5 * float(np.max(self._side)) * math.sqrt(self.n)
        self._normal = self.state.P0.normal_basis()

    @property
    def n(self):
        return self.state.n

    @property
    def codim(self):
        return self.state.mu.N - self.n

    def _z_lookup(self, u):
        if self._ztree is None:
            return np.full(u.shape[0], -1)
        d, j = self._ztree.query(u, k=1)
        return np.where(d <= self.z_tol * max(1.0, float(np.max(np.abs(self.z_u)))), j, -1)

    def _cube_candidates(self, a):
        if not self.cubes:
            return np.zeros(0, dtype=np.int64)
        idx = np.asarray(self._tree.query_ball_point(a, self._reach), dtype=np.int64)
        return idx

    def in_cubes(self, u):
        """True where ``u`` lies in some closed cube."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        out = np.zeros(u.shape[0], dtype=bool)
        if not self.cubes:
            return out
        for r, a in enumerate(u):
            idx = self._cube_candidates(a)
            if idx.size:
                tol = 1e-12 * self._side[idx, None]
                inside = np.all((a >= self._lo[idx] - tol) & (a <= self._hi[idx] + tol), axis=1)
                out[r] = bool(np.any(inside))
        return out

    def in_domain(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        ok = (self._z_lookup(u) >= 0) | self.in_cubes(u)
        return ok & (np.linalg.norm(u, axis=1) <= DOMAIN_RADIUS)

    def weights(self, a):
        """Partition of unity at one point: ``(cube indices, phi values)``."""
        a = np.asarray(a, dtype=float)
        idx = self._cube_candidates(a)
        if idx.size == 0:
            return idx, np.zeros(0)
        r = np.max(np.abs(self._c[idx] - a), axis=1)
        psi = bump_profile((r - self._side[idx]) / (0.5 * self._side[idx]))
        keep = psi > 0
        idx, psi = idx[keep], psi[keep]
        total = psi.sum()
        if total <= 0:
            return idx[:0], psi[:0]
        return idx, psi / total

    def __call__(self, u):
        """Values of ``A`` (normal coordinates) at P0 coordinates ``u``.

        Raises
        ------
        OutOfDomain
        """
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        u = np.atleast_2d(u)
        out = np.empty((u.shape[0], self.codim))
        zj = self._z_lookup(u)
        for r, a in enumerate(u):
            if zj[r] >= 0:
                out[r] = self.z_values[zj[r]]
                continue
            if np.linalg.norm(a) > DOMAIN_RADIUS or not self.in_cubes(a)[0]:
                raise OutOfDomain(f"A is not defined at {a.tolist()}")
            idx, phi = self.weights(a)
            out[r] = sum(p * self.maps[i].coords(a) for i, p in zip(idx, phi))
        return out[0] if single else out

    def ambient(self, u):
        """Graph points ``a + A(a)`` in R^N."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return u @ self.state.P0.basis + self(u) @ self._normal

    def sample_domain(self, count, seed=0):
        """Random domain points: half from ``pi(Z)``, half uniform in cubes
        (cubes chosen proportionally to volume)."""
        rng = np.random.default_rng(seed)
        parts = []
        nz = count // 2 if self.cubes else count
        if len(self.z_index) and nz:
            parts.append(self.z_u[rng.integers(0, len(self.z_index), nz)])
        else:
            nz = 0
        rest = count - nz
        if rest and self.cubes:
            vol = self._side**self.n
            pick = rng.choice(len(self.cubes), size=rest, p=vol / vol.sum())
            pts = self._lo[pick] + rng.random((rest, self.n)) * self._side[pick, None]
            ok = np.linalg.norm(pts, axis=1) <= DOMAIN_RADIUS
            parts.append(pts[ok])
        return np.vstack(parts) if parts else np.zeros((0, self.n))

    def lipschitz_estimate(self, pairs=10_000, seed=0, points=None):
        """Largest ``|A(a) - A(b)| / |a - b|`` over random pairs of domain points."""
        rng = np.random.default_rng(seed)
        U = self.sample_domain(max(2 * int(math.isqrt(pairs)) + 2, 200), seed) if points is None else points
        if U.shape[0] < 2:
            return 0.0
        vals = self(U)
        i = rng.integers(0, U.shape[0], pairs)
        j = rng.integers(0, U.shape[0], pairs)
        du = np.linalg.norm(U[i] - U[j], axis=1)
        ok = du > 0
        dv = np.linalg.norm(vals[i] - vals[j], axis=1)
        return float(np.max(dv[ok] / du[ok])) if np.any(ok) else 0.0

    def z_lipschitz(self):
        """Exact Lipschitz constant of ``A`` restricted to ``pi(Z)``."""
        m = len(self.z_index)
        if m < 2:
            return 0.0
        best = 0.0
        for a in range(0, m, 1024):
            du = np.linalg.norm(self.z_u[a : a + 1024, None] - self.z_u[None], axis=-1)
            dv = np.linalg.norm(self.z_values[a : a + 1024, None] - self.z_values[None], axis=-1)
            ok = du > 0
            if np.any(ok):
                best = max(best, float(np.max(dv[ok] / du[ok])))
        return best

    def partition_error(self, u):
        """``max |sum phi_i - 1|`` over the given covered points."""
        err = 0.0
        for a in np.atleast_2d(u):
            _, phi = self.weights(a)
            if phi.size:
                err = max(err, abs(float(phi.sum()) - 1.0))
        return err

    def export_grid(self, count=200):
        """Rows ``(u..., A(u)...)`` on a regular grid over the domain box.

        Points outside the domain are skipped. For n > 1 ``count`` is the
        number of nodes per axis.
        """
        U = self.state.u
        lo = np.maximum(U.min(axis=0), -DOMAIN_RADIUS)
        hi = np.minimum(U.max(axis=0), DOMAIN_RADIUS)
        axes = [np.linspace(a, b, count) for a, b in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.n)
        mesh = np.vstack([mesh, self.z_u]) if len(self.z_index) else mesh
        mesh = np.unique(mesh[self.in_domain(mesh)], axis=0)
        return np.hstack([mesh, self(mesh)])


def build_graph(state, cubes=None):
    """Assemble ``A`` from a stopping state.

    Raises
    ------
    ProjectionNotInjective
        If two distinct Z points project to the same point of P0.
    NoGoodBall
        Propagated from ball selection.
    """
    if cubes is None:
        cubes = whitney_decompose(state)
    z = np.flatnonzero(state.is_Z)
    normal = state.P0.normal_basis()
    z_u = state.u[z]
    z_vals = state.mu.points[z] @ normal.T
    if z.size > 1:
        scale = max(1.0, float(np.max(np.abs(z_u))))
        tree = cKDTree(z_u)
        for a, b in sorted(tree.query_pairs(Z_TOL * scale)):
            if np.linalg.norm(z_vals[a] - z_vals[b]) > Z_TOL * scale:
                raise ProjectionNotInjective(
                    f"Z points {int(z[a])} and {int(z[b])} share a projection onto P0"
                )
    balls, maps = [], []
    for q in cubes:
        sb = select_ball(state, q)
        balls.append(sb)
        maps.append(plane_as_graph(sb.plane, state.P0))
    return GraphFunction(state, list(cubes), balls, maps, z, z_u, z_vals)


@dataclass
class CoverageReport:
    tol: float
    coverage: float
    defined_mass: float
    label_masses: dict
    g_mass: float
    f_tilde_mass: float
    uncovered_mass: float

    def to_dict(self):
        return {
            "tol": self.tol if math.isfinite(self.tol) else "inf",
            "coverage": self.coverage,
            "defined_mass": self.defined_mass,
            "label_masses": self.label_masses,
            "G_mass": self.g_mass,
            "F_tilde_mass": self.f_tilde_mass,
            "undefined_mass": self.uncovered_mass,
        }


def graph_distances(mu, graph):
    """``|x - (pi(x) + A(pi(x)))|`` per atom of ``mu`` (nan off the domain).

    ``mu`` must live in the normalized coordinates of ``graph.state``.
    """
    st = graph.state
    u = st.project(mu.points)
    out = np.full(mu.size, np.nan)
    ok = graph.in_domain(u)
    if np.any(ok):
        vals = graph(u[ok])
        normal = st.P0.normal_basis()
        out[ok] = np.linalg.norm(mu.points[ok] @ normal.T - vals, axis=1)
    return out


def coverage_report(mu, graph, tol):
    """Fraction of mass within ``tol`` of the graph plus partition masses.

    ``mu`` defaults to the state's normalized measure when None. The ``G``
    set collects non-Z atoms that either project onto ``pi(Z)`` or avoid
    ``K B_i`` for every cube with ``pi(x)`` in ``3R_i``; ``F~`` collects
    the remaining atoms within ``sqrt(eps) d(x)`` of the graph.
    """
    st = graph.state
    mu = st.mu if mu is None else mu
    tol = float(tol)
    w = mu.weights
    total = float(np.sum(w))
    if math.isinf(tol):
        coverage = 1.0
        dist = graph_distances(mu, graph) if mu is st.mu else None
    else:
        dist = graph_distances(mu, graph)
        hit = np.isfinite(dist) & (dist <= tol)
        coverage = float(np.sum(w[hit])) / total
    defined = float(np.sum(w[np.isfinite(dist)])) / total if dist is not None else float("nan")
    labels = {lab: 0.0 for lab in LABELS}
    g_mass = ft_mass = 0.0
    if mu is st.mu:
        labels = st.label_masses()
        g, ft = _g_and_f_tilde(st, graph, dist)
        g_mass = float(np.sum(w[g]))
        ft_mass = float(np.sum(w[ft]))
    return CoverageReport(tol, coverage, defined, labels, g_mass, ft_mass, 1.0 - defined)


def _g_and_f_tilde(st, graph, dist):
    M = st.mu.size
    u = st.u
    pts = st.mu.points
    g = np.zeros(M, dtype=bool)
    zj = graph._z_lookup(u)
    for i in range(M):
        if st.is_Z[i]:
            continue
        if zj[i] >= 0:
            g[i] = True
            continue
        near = True
        for q, sb in zip(graph.cubes, graph.balls):
            if np.max(np.abs(u[i] - q.center)) <= 1.5 * q.side:
                if np.linalg.norm(pts[i] - sb.ball.center) <= GRAPH_K * sb.ball.radius:
                    near = False
                    break
        g[i] = near
    eps = st.params.epsilon
    ft = ~g & np.isfinite(dist) & (np.nan_to_num(dist, nan=np.inf) <= math.sqrt(eps) * st.d + 1e-15)
    return g, ft
