"""Dyadic Whitney decomposition of the reference plane relative to ``D``
and the choice of a stopping ball for every cube."""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..errors import NoGoodBall
from ..geometry import AffineSubspace
from ..measure import Ball
from .stopping import evaluate_pair

DOMAIN_RADIUS = 12.0
WHITNEY_FACTOR = 20.0


@dataclass(frozen=True)
class WhitneyCube:
    """Half-open dyadic cell ``[corner*side, (corner+1)*side)`` in P0 coordinates."""

    level: int
    corner: tuple
    side: float

    @property
    def n(self):
        return len(self.corner)

    @property
    def lo(self):
        return np.asarray(self.corner, dtype=float) * self.side

    @property
    def hi(self):
        return self.lo + self.side

    @property
    def center(self):
        return self.lo + 0.5 * self.side

    @property
    def diam(self):
        return self.side * math.sqrt(self.n)

    def scaled_box(self, factor):
        """Concentric box ``factor * R`` as ``(lo, hi)``."""
        half = 0.5 * self.side * factor
        return self.center - half, self.center + half

    def contains(self, u, factor=1.0):
        lo, hi = self.scaled_box(factor)
        u = np.asarray(u, dtype=float)
        return np.all((u >= lo - 1e-12 * self.side) & (u <= hi + 1e-12 * self.side), axis=-1)

    def to_dict(self):
        return {"level": self.level, "corner": list(self.corner), "side": self.side, "diam": self.diam}


def _box_gap(lo1, hi1, lo2, hi2):
    """Euclidean distance between two boxes."""
    gap = np.maximum(np.maximum(lo1 - hi2, lo2 - hi1), 0.0)
    return float(np.linalg.norm(gap))


def whitney_decompose(state, min_diam=None, max_cells=200_000):
    """Maximal dyadic cells ``Q`` with ``diam Q <= inf_Q D / 20``.

    The domain is the bounding box of ``pi(F)`` intersected with
    ``B(0, 12)`` in P0 coordinates. Cells are refined until they pass the
    test or their children would have diameter below ``min_diam`` (default:
    a quarter of the median spacing of ``pi(F)``); cells stopped by that
    floor are left out.

    Returns
    -------
    list of WhitneyCube
        Empty when every point has zero stopping height.
    """
    u = state.u
    n = u.shape[1]
    if np.all(state.is_Z):
        return []
    if min_diam is None:
        if u.shape[0] > 1:
            dd, _ = cKDTree(u).query(u, k=2)
            pos = dd[:, 1][dd[:, 1] > 0]
            min_diam = 0.25 * float(np.median(pos)) if pos.size else 1e-3
        else:
            min_diam = 1e-3
    box_lo = np.maximum(u.min(axis=0), -DOMAIN_RADIUS)
    box_hi = np.minimum(u.max(axis=0), DOMAIN_RADIUS)
    extent = float(np.max(box_hi - box_lo))
    if extent <= 0:
        return []

    center = 0.5 * (box_lo + box_hi)
    Dmax = float(state.D(center)[0]) + 0.5 * float(np.linalg.norm(box_hi - box_lo))
    if not math.isfinite(Dmax):
        # no stopping pairs at all: one layer of cells covering the box
        side = 2.0 ** math.ceil(math.log2(extent))
        return _cover(box_lo, box_hi, side, 0)
    # top cells must fail the test so that emitted cells are maximal
    need = max(Dmax / WHITNEY_FACTOR, extent) / math.sqrt(n)
    side0 = 2.0 ** (math.floor(math.log2(need)) + 1)
    stack = [(0, c) for c in _cover_corners(box_lo, box_hi, side0)]
    out = []
    visited = 0
    while stack:
        level, corner = stack.pop()
        visited += 1
        if visited > max_cells:
            break
        side = side0 * 2.0**-level
        lo = np.asarray(corner, dtype=float) * side
        hi = lo + side
        if _box_gap(lo, hi, box_lo, box_hi) > 0 or _box_gap(lo, hi, -DOMAIN_RADIUS * np.ones(n), DOMAIN_RADIUS * np.ones(n)) > 0:
            continue
        if np.linalg.norm(np.clip(np.zeros(n), lo, hi)) > DOMAIN_RADIUS:
            continue
        diam = side * math.sqrt(n)
        if diam <= state.D_box(lo, hi) / WHITNEY_FACTOR:
            out.append(WhitneyCube(level, tuple(int(c) for c in corner), side))
            continue
        if 0.5 * diam < min_diam:
            continue
        base = np.asarray(corner, dtype=np.int64) * 2
        for off in itertools.product((1, 0), repeat=n):
            stack.append((level + 1, tuple(int(v) for v in base + np.array(off))))
    out.sort(key=lambda q: (q.level, q.corner))
    return out


def _cover_corners(lo, hi, side):
    a = np.floor(lo / side).astype(np.int64)
    b = np.floor(hi / side).astype(np.int64)
    ranges = [range(int(x), int(y) + 1) for x, y in zip(a, b)]
    return [tuple(c) for c in itertools.product(*ranges)]


def _cover(lo, hi, side, level):
    return [WhitneyCube(level, c, side) for c in _cover_corners(lo, hi, side)]


def neighbours(cubes, factor=10.0):
    """Index pairs ``(i, j)``, ``i < j``, whose ``factor``-dilated cells meet."""
    if not cubes:
        return []
    C = np.array([q.center for q in cubes])
    H = np.array([0.5 * q.side * factor for q in cubes])
    pairs = []
    for i in range(len(cubes)):
        gap = np.abs(C[i + 1 :] - C[i]) - (H[i + 1 :, None] + H[i])
        hit = np.flatnonzero(np.all(gap <= 1e-12, axis=1))
        pairs.extend((i, i + 1 + int(j)) for j in hit)
    return pairs


@dataclass
class WhitneyCheck:
    bound_violations: int
    comparability_violations: int
    neighbour_count_violations: int
    points_tested: int
    pairs_tested: int
    max_neighbours: int

    @property
    def ok(self):
        return self.bound_violations == 0 and self.comparability_violations == 0 and \
            self.neighbour_count_violations == 0


def check_whitney(state, cubes, samples_per_cube=9, seed=0):
    """Count violations of the three cube invariants.

    (i) ``10 diam R <= D(x) <= 50 diam R`` at corners, centre and random
    points of ``10 R``; (iii) diameters of cubes whose ``10 R`` meet differ
    by at most a factor 5; (iv) each cube has at most ``180^n`` such
    neighbours.
    """
    rng = np.random.default_rng(seed)
    bad_i = tested = 0
    for q in cubes:
        lo, hi = q.scaled_box(10.0)
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        rand = lo + rng.random((samples_per_cube, q.n)) * (hi - lo)
        pts = np.vstack([corners, q.center[None], rand])
        D = state.D(pts)
        tol = 1e-9 * q.diam
        bad_i += int(np.sum((D < 10 * q.diam - tol) | (D > 50 * q.diam + tol)))
        tested += pts.shape[0]
    pairs = neighbours(cubes)
    bad_iii = 0
    count = np.zeros(len(cubes), dtype=np.int64)
    for i, j in pairs:
        a, b = cubes[i].diam, cubes[j].diam
        if a > 5 * b * (1 + 1e-12) or b > 5 * a * (1 + 1e-12):
            bad_iii += 1
        count[i] += 1
        count[j] += 1
    n = cubes[0].n if cubes else 1
    bad_iv = int(np.sum(count > 180**n))
    return WhitneyCheck(bad_i, bad_iii, bad_iv, tested, len(pairs), int(count.max()) if len(cubes) else 0)


@dataclass(frozen=True)
class SelectedBall:
    """Stopping ball ``B_i`` for a cube with its witness plane ``P_i``."""

    ball: Ball
    plane: AffineSubspace
    point_index: int
    t: float
    inflated: bool


def _candidates(state, x, Dx):
    """Admissible ``(t, i, on_grid)`` pairs, largest ``t`` first.

    Grid pairs in S with ``|pi(X) - x| + t <= 2 D(x)`` contribute their
    largest admissible scale; Z points (in S at every scale) contribute
    the largest admissible radius off the grid.
    """
    fin = np.flatnonzero(np.isfinite(state.s_min))
    dist = np.linalg.norm(state.u[fin] - x, axis=1)
    budget = 2 * Dx * (1 + 1e-12) - dist
    out = []
    S = state.in_S[fin]
    for j in range(state.scales.size - 1, -1, -1):
        ok = np.flatnonzero(S[:, j] & (state.scales[j] <= budget))
        if ok.size:
            b = ok[np.argmin(dist[ok])]
            out.append((float(state.scales[j]), int(fin[b]), True))
            break
    z = np.flatnonzero(state.is_Z[fin] & (budget > 0))
    for b in z[np.argsort(-budget[z], kind="stable")][:4]:
        out.append((float(budget[b]) / (1 + 1e-12), int(fin[b]), False))
    # the minimiser of D always qualifies, at its smallest scale
    b = int(np.argmin(dist + state.s_min[fin]))
    out.append((float(state.s_min[fin[b]]), int(fin[b]), True))
    out.sort(key=lambda c: -c[0])
    return out


def select_ball(state, cube):
    """Stopping ball ``B_i`` and witness plane ``P_i`` for a cube.

    Among pairs ``(X, t)`` in S with ``|pi(X) - x| + t <= 2 D(x)`` at the
    cube centre ``x`` the largest ``t`` is preferred; larger admissible
    balls see the data around the cube, so neighbouring cubes get
    coherent planes. The radius is inflated to ``max(t, diam R / 2)`` and
    a witness plane is taken at that radius; candidates whose inflated
    ball fails the membership test are skipped.

    Raises
    ------
    NoGoodBall
        If S is empty, no candidate yields a witness, or the displayed
        bounds fail.
    """
    if not np.any(np.isfinite(state.s_min)):
        raise NoGoodBall("stopping set is empty")
    x = cube.center
    Dx = float(state.D(x)[0])
    chosen = None
    for t, i, on_grid in _candidates(state, x, Dx):
        r = max(t, 0.5 * cube.diam)
        X = state.mu.points[i]
        if on_grid and r == t and t > 0:
            plane = state.witness_plane(i, t)
        else:
            member, _, plane = evaluate_pair(state, X, r)
            if not member:
                plane = None
        if plane is not None:
            chosen = (t, i, r, plane)
            break
    if chosen is None:
        raise NoGoodBall(f"no admissible ball with a witness plane for cube at {x.tolist()}")
    t, i, r, plane = chosen
    cost = float(np.linalg.norm(state.u[i] - x)) + t
    dist_ball_cube = max(0.0, _point_box_dist(state.u[i], cube.lo, cube.hi) - r)
    if not (cube.diam <= 2 * r * (1 + 1e-12) and 2 * r <= 200 * cube.diam * (1 + 1e-12)):
        raise NoGoodBall(f"ball diameter {2 * r:.4g} not comparable with cube diameter {cube.diam:.4g}")
    if dist_ball_cube > 100 * cube.diam * (1 + 1e-12):
        raise NoGoodBall("projected ball too far from its cube")
    if not cost <= 2 * Dx * (1 + 1e-9) + 1e-12:
        raise NoGoodBall("selection cost exceeds 2 D(x)")
    return SelectedBall(Ball(state.mu.points[i], r), plane, i, t, r > t)


def _point_box_dist(p, lo, hi):
    return float(np.linalg.norm(np.maximum(np.maximum(lo - p, p - hi), 0.0)))
