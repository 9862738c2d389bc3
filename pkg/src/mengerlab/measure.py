"""Weighted point clouds standing in for a Borel measure, closed-ball
queries, measure quotients and test-set generators."""

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .errors import BadParams, EmptyMeasure

# Closed balls get a relative slack so that lattice points sitting exactly
# on a sphere stay inside after rescaling by non-dyadic factors.
BALL_RTOL = 1e-12


def in_closed_ball(dist, radius):
    """Closed-ball predicate shared by every query in the library."""
    return dist <= radius * (1.0 + BALL_RTOL)


@dataclass(frozen=True)
class Ball:
    """Closed ball ``B(center, radius)``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(-1)
        c.setflags(write=False)
        r = float(self.radius)
        if not (r > 0 and math.isfinite(r)):
            raise BadParams(f"ball radius must be positive and finite, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    def scaled(self, s):
        return Ball(self.center * s, self.radius * s)


class DiscreteMeasure:
    """Finite weighted sum of Dirac masses in R^N.

    Parameters
    ----------
    points : array_like, shape (M, N)
    weights : array_like, shape (M,), optional
        Positive masses. Default is uniform with total mass 1.
    intrinsic_dim : int
        The dimension ``n`` used in the quotients ``mu(B)/t^n``.
    """

    def __init__(self, points, weights=None, intrinsic_dim=1):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[0] == 0:
            raise EmptyMeasure("measure has no atoms")
        if not np.all(np.isfinite(pts)):
            raise BadParams("non-finite coordinates")
        M = pts.shape[0]
        if weights is None:
            w = np.full(M, 1.0 / M)
        else:
            w = np.array(weights, dtype=float).reshape(-1)
            if w.shape[0] != M:
                raise BadParams(f"{w.shape[0]} weights for {M} points")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise BadParams("weights must be positive and finite")
        n = int(intrinsic_dim)
        if n < 1 or n >= pts.shape[1]:
            raise BadParams(f"intrinsic dimension {n} must satisfy 1 <= n < N={pts.shape[1]}")
        pts.setflags(write=False)
        w.setflags(write=False)
        self._points = pts
        self._weights = w
        self._n = n

    points = property(lambda self: self._points)
    weights = property(lambda self: self._weights)
    n = property(lambda self: self._n)
    intrinsic_dim = n

    @property
    def N(self):
        return self._points.shape[1]

    @property
    def size(self):
        return self._points.shape[0]

    def __len__(self):
        return self.size

    @cached_property
    def total_mass(self):
        return float(np.sum(self._weights))

    @cached_property
    def tree(self):
        return cKDTree(self._points)

    @cached_property
    def diameter(self):
        if self.size == 1:
            return 0.0
        if self.size <= 4000:
            return float(pdist(self._points).max())
        # bounding-box diagonal is a cheap upper bound for large clouds
        span = self._points.max(axis=0) - self._points.min(axis=0)
        return float(np.linalg.norm(span))

    @cached_property
    def resolution(self):
        """Smallest positive nearest-neighbour distance (inf for one atom)."""
        if self.size == 1:
            return math.inf
        d, _ = self.tree.query(self._points, k=min(self.size, 8))
        pos = d[:, 1:][d[:, 1:] > 0]
        return float(pos.min()) if pos.size else math.inf

    @cached_property
    def median_spacing(self):
        """Median nearest-neighbour distance (inf for one atom)."""
        if self.size == 1:
            return math.inf
        d, _ = self.tree.query(self._points, k=2)
        return float(np.median(d[:, 1]))

    # ------------------------------------------------------------------
    # ball queries

    def ball_indices(self, center, radius):
        """Sorted indices of atoms in the closed ball."""
        center = np.asarray(center, dtype=float)
        cand = self.tree.query_ball_point(center, radius * (1.0 + 1e-9) + 1e-300)
        if not cand:
            return np.zeros(0, dtype=np.int64)
        cand = np.asarray(cand, dtype=np.int64)
        d = np.linalg.norm(self._points[cand] - center, axis=1)
        return np.sort(cand[in_closed_ball(d, radius)])

    def ball_indices_many(self, centers, radius):
        """List of index arrays for several centers with a common radius."""
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        lists = self.tree.query_ball_point(centers, radius * (1.0 + 1e-9) + 1e-300)
        out = []
        for c, cand in zip(centers, lists):
            cand = np.asarray(cand, dtype=np.int64)
            if cand.size:
                d = np.linalg.norm(self._points[cand] - c, axis=1)
                cand = np.sort(cand[in_closed_ball(d, radius)])
            out.append(cand)
        return out

    def ball_mass(self, ball):
        idx = self.ball_indices(ball.center, ball.radius)
        return float(np.sum(self._weights[idx]))

    def ball_masses(self, centers, radius):
        return np.array([np.sum(self._weights[i]) for i in self.ball_indices_many(centers, radius)])

    def _subset_mask(self, subset):
        if subset is None:
            return None
        if callable(subset):
            mask = np.asarray(subset(self._points), dtype=bool)
        else:
            mask = np.asarray(subset)
            if mask.dtype != bool:
                m = np.zeros(self.size, dtype=bool)
                m[mask.astype(np.int64)] = True
                mask = m
        if mask.shape != (self.size,):
            raise BadParams("subset mask has the wrong length")
        return mask

    def delta(self, ball, subset=None):
        """Measure quotient ``mu(B cap subset) / radius^n``.

        ``subset`` may be a predicate on point arrays, a boolean mask or an
        index array.
        """
        idx = self.ball_indices(ball.center, ball.radius)
        mask = self._subset_mask(subset)
        if mask is not None:
            idx = idx[mask[idx]]
        return float(np.sum(self._weights[idx])) / ball.radius ** self._n

    def delta_tilde(self, ball, k0):
        """Largest quotient ``delta(B(y, t))`` over centers ``y`` near ``x``.

        Candidate centers are ``x`` itself and every atom in ``B(x, k0 t)``;
        this approximates the supremum over the whole ball from below.
        """
        if k0 < 1:
            raise BadParams("k0 must be >= 1")
        t = ball.radius
        near = self.ball_indices(ball.center, k0 * t)
        cands = np.vstack([ball.center[None, :], self._points[near]])
        masses = self.ball_masses(cands, t)
        return float(masses.max()) / t ** self._n

    def upper_regularity_constant(self, min_radius=None):
        """Largest ``mu(B)/(diam B)^n`` over a family of test balls.

        Balls are centred at atoms with dyadic radii from ``min_radius``
        (default: the interpoint resolution) up to the diameter. A single
        atom without ``min_radius`` yields ``inf``.
        """
        r0 = self.resolution if min_radius is None else float(min_radius)
        if not math.isfinite(r0):
            return math.inf
        top = max(self.diameter, r0)
        radii = r0 * 2.0 ** np.arange(0, max(1, int(math.ceil(math.log2(top / r0))) + 1) + 1)
        best = 0.0
        for r in radii:
            m = self.ball_masses(self._points, r)
            best = max(best, float(m.max()) / (2 * r) ** self._n)
        return best

    # ------------------------------------------------------------------
    # transformations

    def scaled(self, s, mass_scale=None):
        """Spatially scale by ``s``; masses by ``s^n`` unless given."""
        ms = s ** self._n if mass_scale is None else mass_scale
        return DiscreteMeasure(self._points * s, self._weights * ms, self._n)

    def translated(self, b):
        return DiscreteMeasure(self._points + np.asarray(b, dtype=float), self._weights, self._n)

    def restricted(self, subset):
        mask = self._subset_mask(subset)
        if not np.any(mask):
            raise EmptyMeasure("restriction removes every atom")
        return DiscreteMeasure(self._points[mask], self._weights[mask], self._n)

    def normalized(self):
        return DiscreteMeasure(self._points, self._weights / self.total_mass, self._n)

    def with_intrinsic_dim(self, n):
        return DiscreteMeasure(self._points, self._weights, n)

    # ------------------------------------------------------------------
    # IO

    def to_csv(self, path, include_weights=True):
        write_csv(path, self, include_weights)

    @classmethod
    def from_csv(cls, path, intrinsic_dim=1):
        return read_csv(path, intrinsic_dim)

    def __repr__(self):
        return f"DiscreteMeasure(M={self.size}, N={self.N}, n={self._n}, mass={self.total_mass:.6g})"


def write_csv(path, mu, include_weights=True):
    """Write ``x0,...,x{N-1}[,w]`` with round-trip exact float formatting."""
    header = [f"x{i}" for i in range(mu.N)] + (["w"] if include_weights else [])
    data = np.column_stack([mu.points, mu.weights]) if include_weights else mu.points
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def read_csv(path, intrinsic_dim=1):
    """Read a point CSV; without a ``w`` column masses are uniform with total 1."""
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
        header = [h.strip() for h in header]
        xs = [h for h in header if h.startswith("x")]
        if not xs or xs != [f"x{i}" for i in range(len(xs))]:
            raise BadParams(f"unexpected CSV header {header}")
        has_w = "w" in header
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        raise EmptyMeasure(f"{path} has no rows")
    xcols = [header.index(f"x{i}") for i in range(len(xs))]
    pts = data[:, xcols]
    w = data[:, header.index("w")] if has_w else None
    return DiscreteMeasure(pts, w, intrinsic_dim)


# ----------------------------------------------------------------------
# generators

GENERATOR_KINDS = (
    "segment",
    "plane_patch",
    "lipschitz_graph",
    "sphere",
    "four_corner_cantor",
    "cantor_product",
)


def _cantor_1d(depth):
    """Centres of the 2^depth intervals of the quarter-keeping Cantor set."""
    c = np.array([0.5])
    side = 1.0
    for _ in range(depth):
        side /= 4.0
        # children of [a, a + 4s] are [a, a+s] and [a+3s, a+4s]
        c = np.concatenate([c - 1.5 * side, c + 1.5 * side])
        c.sort()
    return c


def cantor_product_points(n, depth):
    """Product of ``2n`` copies of the 1-D quarter Cantor set in R^(2n)."""
    c = _cantor_1d(depth)
    grids = np.meshgrid(*([c] * (2 * n)), indexing="ij")
    return np.column_stack([g.reshape(-1) for g in grids])


def lipschitz_profile(n, coeffs, phases, domain):
    """Return ``g`` with ``|grad g| <= 1`` built from sine harmonics.

    ``g(u) = sum_j sum_k c_k sin(k pi (u_j - lo_j)/w_j + phase_jk) / bound``
    where ``bound`` is the Euclidean norm of the per-axis derivative bounds.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    phases = np.asarray(phases, dtype=float).reshape(n, len(coeffs))
    lo = np.array([d[0] for d in domain], dtype=float)
    width = np.array([d[1] - d[0] for d in domain], dtype=float)
    k = np.arange(1, len(coeffs) + 1)
    axis_bound = np.sum(np.abs(coeffs) * k * np.pi) / width
    bound = float(np.linalg.norm(axis_bound))
    if bound == 0:
        bound = 1.0

    def g(u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        arg = (u - lo)[:, :, None] * (k * np.pi / width[:, None])[None] + phases[None]
        return np.sum(coeffs * np.sin(arg), axis=(1, 2)) / bound

    return g


def generate(kind, params=None, seed=0, **kwargs):
    """Generate a test measure with total mass 1.

    Parameters
    ----------
    kind : str
        One of ``GENERATOR_KINDS``.
    params : dict, optional
        Kind-specific parameters; keyword arguments are merged in. Common
        keys: ``n_points``, ``ambient``, ``n`` and ``noise`` (Gaussian
        sigma added to every coordinate).
    seed : int

    Notes
    -----
    ``segment``: ``n_points`` atoms on ``[0, length]`` along the first axis,
    evenly spaced unless ``random=True``.
    ``plane_patch``: uniform points in ``[0, side]^n x {0}``.
    ``lipschitz_graph``: uniform ``u`` in ``domain`` and height
    ``lipschitz * g(u)`` in coordinate ``n``; ``g`` is a 1-Lipschitz sine
    series with amplitudes ``coeffs`` and seeded phases, so graphs that
    share a seed differ only by the factor ``lipschitz``.
    ``sphere``: uniform points on the unit n-sphere.
    ``four_corner_cantor``: 4^depth square centres of the four-corner set.
    ``cantor_product``: product of 2n quarter Cantor sets in R^(2n).
    """
    p = dict(params or {})
    p.update(kwargs)
    rng = np.random.default_rng(seed)
    noise = float(p.pop("noise", 0.0) or 0.0)
    kind = str(kind)
    try:
        if kind == "segment":
            M = int(p.get("n_points", 100))
            N = int(p.get("ambient", 2))
            length = float(p.get("length", 1.0))
            n = 1
            if M < 1 or N < 2:
                raise BadParams("segment needs n_points >= 1 and ambient >= 2")
            x = rng.random(M) * length if p.get("random", False) else np.linspace(0.0, length, M)
            pts = np.zeros((M, N))
            pts[:, 0] = np.sort(x)
        elif kind == "plane_patch":
            n = int(p.get("n", 2))
            N = int(p.get("ambient", n + 1))
            M = int(p.get("n_points", 400))
            side = float(p.get("side", 1.0))
            if M < 1 or N <= n or n < 1:
                raise BadParams("plane_patch needs n_points >= 1 and ambient > n >= 1")
            pts = np.zeros((M, N))
            pts[:, :n] = rng.random((M, n)) * side
        elif kind == "lipschitz_graph":
            n = int(p.get("n", 1))
            N = int(p.get("ambient", n + 1))
            M = int(p.get("n_points", 100))
            L = float(p.get("lipschitz", 0.5))
            domain = p.get("domain") or [(0.0, 1.0)] * n
            coeffs = p.get("coeffs")
            if M < 1 or N <= n or L < 0 or len(domain) != n:
                raise BadParams("invalid lipschitz_graph parameters")
            if coeffs is None:
                coeffs = 1.0 / np.arange(1, 5) ** 2
            phases = rng.uniform(0, 2 * np.pi, size=(n, len(coeffs)))
            g = lipschitz_profile(n, coeffs, phases, domain)
            lo = np.array([d[0] for d in domain], dtype=float)
            hi = np.array([d[1] for d in domain], dtype=float)
            u = lo + rng.random((M, n)) * (hi - lo)
            pts = np.zeros((M, N))
            pts[:, :n] = u
            pts[:, n] = L * g(u)
        elif kind == "sphere":
            n = int(p.get("n", 1))
            N = int(p.get("ambient", n + 1))
            M = int(p.get("n_points", 200))
            radius = float(p.get("radius", 1.0))
            if M < 1 or N < n + 1:
                raise BadParams("sphere needs ambient >= n + 1")
            v = rng.normal(size=(M, n + 1))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            pts = np.zeros((M, N))
            pts[:, : n + 1] = radius * v
        elif kind in ("four_corner_cantor", "cantor_product"):
            n = 1 if kind == "four_corner_cantor" else int(p.get("n", 1))
            depth = int(p.get("depth", 4))
            if depth < 0 or n < 1 or (2 ** (2 * n)) ** depth > 5_000_000:
                raise BadParams("invalid Cantor depth")
            pts = cantor_product_points(n, depth)
        else:
            raise BadParams(f"unknown generator kind {kind!r}")
    except (TypeError, ValueError) as exc:
        raise BadParams(str(exc)) from exc
    if noise < 0:
        raise BadParams("noise must be >= 0")
    mu = DiscreteMeasure(pts, None, n)
    if noise > 0:
        mu = add_noise(mu, noise, rng)
    return mu


def add_noise(mu, sigma, rng=None, seed=0):
    """Add isotropic Gaussian noise of standard deviation ``sigma``."""
    rng = np.random.default_rng(seed) if rng is None else rng
    pts = mu.points + rng.normal(scale=sigma, size=mu.points.shape)
    return DiscreteMeasure(pts, mu.weights, mu.n)
