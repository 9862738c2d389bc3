"""Simplices: volumes, faces, heights, (m, sigma) predicates, max-volume
search and slab covers."""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFace, IndexOutOfRange, TooFewPoints, TooLarge
from .geometry import AffineSubspace, affine_hull

DEGENERACY_RTOL = 1e-12
EXACT_SEARCH_CAP = 2_000_000


def edge_volumes(E):
    """Parallelotope volumes for a batch of edge sets.

    Parameters
    ----------
    E : ndarray, shape (..., m, N)
        Edge vectors ``x_i - x_0``.

    Returns
    -------
    ndarray, shape (...)
        ``sqrt(Gram(E))`` computed as the product of modified Gram-Schmidt
        residual norms (two passes). This is much better conditioned than
        taking the determinant of ``E E^T`` for thin simplices.
    """
    E = np.asarray(E, dtype=float)
    m = E.shape[-2]
    if m == 0:
        return np.ones(E.shape[:-2])
    Q = []
    vol = np.ones(E.shape[:-2])
    for l in range(m):
        r = E[..., l, :].copy()
        for _ in range(2):
            for q in Q:
                r -= np.sum(r * q, axis=-1, keepdims=True) * q
        nr = np.linalg.norm(r, axis=-1)
        vol = vol * nr
        with np.errstate(invalid="ignore", divide="ignore"):
            q = np.where(nr[..., None] > 0, r / np.where(nr > 0, nr, 1.0)[..., None], 0.0)
        Q.append(q)
    return vol


def pairwise_diameter(X):
    """Largest pairwise distance within each vertex set of a batch ``(..., k, N)``."""
    X = np.asarray(X, dtype=float)
    diff = X[..., :, None, :] - X[..., None, :, :]
    return np.sqrt(np.max(np.sum(diff * diff, axis=-1), axis=(-1, -2)))


def degenerate_mask(vol, diam, m):
    """Scale-aware degeneracy test ``Gram < 1e-12 * diam^(2m)``."""
    vol = np.asarray(vol)
    diam = np.asarray(diam)
    return (vol * vol < DEGENERACY_RTOL * diam ** (2 * m)) | (diam == 0)


@dataclass(frozen=True, eq=False)
class Simplex:
    """Ordered list of ``m + 1`` vertices in R^N.

    ``indices`` optionally records which input points the vertices came
    from (set by the search routines).
    """

    vertices: np.ndarray
    indices: tuple = None

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1:
            raise TooFewPoints("a simplex needs at least one vertex")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def m(self):
        return self.vertices.shape[0] - 1

    @property
    def ambient_dim(self):
        return self.vertices.shape[1]

    @property
    def diam(self):
        if self.m == 0:
            return 0.0
        return float(pairwise_diameter(self.vertices))

    @property
    def gram(self):
        return normalized_volume(self) ** 2

    @property
    def is_degenerate(self):
        if self.m == 0:
            return False
        vol = normalized_volume(self)
        return bool(degenerate_mask(vol, self.diam, self.m))

    def __len__(self):
        return self.vertices.shape[0]


def _as_simplex(T):
    return T if isinstance(T, Simplex) else Simplex(T)


def normalized_volume(T):
    """``Vol(T) = sqrt(Gram(x_1 - x_0, ..., x_m - x_0))``."""
    T = _as_simplex(T)
    v = T.vertices
    return float(edge_volumes(v[1:] - v[0]))


def hausdorff_volume(T):
    """m-dimensional Hausdorff measure ``Vol(T) / m!`` of the simplex."""
    T = _as_simplex(T)
    return normalized_volume(T) / math.factorial(T.m)


def face(T, i):
    """Simplex with vertex ``i`` removed, order preserved."""
    T = _as_simplex(T)
    if T.m < 1:
        raise IndexOutOfRange("a 0-simplex has no faces")
    if not 0 <= i <= T.m:
        raise IndexOutOfRange(f"index {i} outside 0..{T.m}")
    keep = [j for j in range(T.m + 1) if j != i]
    idx = None if T.indices is None else tuple(T.indices[j] for j in keep)
    return Simplex(T.vertices[keep], idx)


def _face_flat(F):
    """Affine flat spanned by a face, or DegenerateFace."""
    v = F.vertices
    if F.m == 0:
        return AffineSubspace(v[0], np.zeros((0, v.shape[1])))
    if F.is_degenerate:
        raise DegenerateFace("face does not span a flat of full dimension")
    return AffineSubspace.from_directions(v[0], v[1:] - v[0])


def height(T, i):
    """Distance from vertex ``i`` to the affine hull of the opposite face."""
    T = _as_simplex(T)
    F = face(T, i)
    return float(_face_flat(F).distance(T.vertices[i]))


def heights(T):
    T = _as_simplex(T)
    return np.array([height(T, i) for i in range(T.m + 1)])


def is_sigma_simplex(T, sigma):
    """True iff every height is at least ``sigma``.

    Convention: if some face is degenerate, heights are undefined and the
    answer is False.
    """
    T = _as_simplex(T)
    try:
        h = heights(T)
    except DegenerateFace:
        return False
    return bool(np.all(h >= sigma))


def _volumes_of(points, combos):
    P = points[combos]
    return edge_volumes(P[:, 1:] - P[:, :1])


def _first_max(vols, rtol=1e-12):
    """Index of the first entry within ``rtol`` of the maximum."""
    vmax = vols.max()
    return int(np.flatnonzero(vols >= vmax * (1 - rtol))[0])


def max_volume_simplex(points, m, mode="auto"):
    """Search for an m-simplex of maximal volume with vertices in ``points``.

    Parameters
    ----------
    points : array_like, shape (k, N)
    m : int
    mode : {"auto", "exact", "greedy"}
        ``exact`` enumerates all (m+1)-subsets (lexicographic order, ties
        go to the first). It is limited to ``EXACT_SEARCH_CAP`` subsets.
        ``greedy`` seeds by farthest-point insertion and then improves by
        single-vertex swaps until none helps. ``auto`` picks exact when
        within the cap.

    Returns
    -------
    Simplex
        With ``indices`` sorted ascending. Check ``is_degenerate``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = pts.shape[0]
    if k < m + 1:
        raise TooFewPoints(f"need {m + 1} points, got {k}")
    ncomb = math.comb(k, m + 1)
    if mode == "auto":
        mode = "exact" if ncomb <= EXACT_SEARCH_CAP else "greedy"
    if mode == "exact":
        if ncomb > EXACT_SEARCH_CAP:
            raise TooLarge(f"{ncomb} subsets exceed the exact-search cap")
        best, best_idx = -1.0, None
        it = itertools.combinations(range(k), m + 1)
        while True:
            chunk = np.array(list(itertools.islice(it, 200_000)), dtype=np.int64)
            if chunk.size == 0:
                break
            vols = _volumes_of(pts, chunk)
            j = _first_max(vols)
            if vols[j] > best * (1 + 1e-12):
                best, best_idx = vols[j], tuple(int(i) for i in chunk[j])
        return Simplex(pts[list(best_idx)], best_idx)
    if mode != "greedy":
        raise ValueError(f"unknown mode {mode!r}")
    return _greedy_simplex(pts, m)


def _greedy_simplex(pts, m):
    k = pts.shape[0]
    # seed: point farthest from the centroid, then farthest from the flat
    c = pts.mean(axis=0)
    spread = np.linalg.norm(pts - c, axis=1)
    scale = max(float(spread.max()), 1e-300)
    chosen = [int(np.argmax(spread))]
    while len(chosen) < m + 1:
        flat = affine_hull(pts[chosen], rank_tol=1e-12 * scale) if len(chosen) > 1 else \
            AffineSubspace(pts[chosen[0]], np.zeros((0, pts.shape[1])))
        d = flat.distance(pts)
        d[chosen] = -1.0
        chosen.append(int(np.argmax(d)))
    chosen = sorted(chosen)
    cur = float(edge_volumes(pts[chosen][1:] - pts[chosen][0]))
    improved = True
    while improved:
        improved = False
        for pos in range(m + 1):
            cand = np.array([c2 for c2 in range(k) if c2 not in chosen], dtype=np.int64)
            if cand.size == 0:
                break
            trial = np.repeat(np.array(chosen)[None, :], cand.size, axis=0)
            trial[:, pos] = cand
            trial.sort(axis=1)
            vols = _volumes_of(pts, trial)
            j = int(np.argmax(vols))
            if vols[j] > cur * (1 + 1e-12) + 1e-300:
                chosen = [int(i) for i in trial[j]]
                cur = float(vols[j])
                improved = True
    return Simplex(pts[chosen], tuple(chosen))


def _has_sigma_simplex(pts, m, H):
    """Whether some (m+1)-subset forms an (m, H)-simplex.

    Exact over all subsets when that is cheap, otherwise only the greedy
    max-volume candidate is tested.
    """
    k = pts.shape[0]
    if k < m + 1:
        return False
    if m == 0:
        return True
    if math.comb(k, m + 1) <= 20_000:
        for c in itertools.combinations(range(k), m + 1):
            if is_sigma_simplex(Simplex(pts[list(c)]), H):
                return True
        return False
    return is_sigma_simplex(_greedy_simplex(pts, m), H)


def slab_cover(points, m, H):
    """Cover a point set by the H-neighbourhood of a low-dimensional flat.

    If no (m, H)-simplex exists among the points, let ``l`` be the largest
    dimension for which an (l, H)-simplex exists; the max-volume l-simplex
    spans a flat that has every point within ``H``.

    Returns
    -------
    (AffineSubspace, int) or None
        ``None`` when an (m, H)-simplex exists (no cover).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if _has_sigma_simplex(pts, m, H):
        return None
    for l in range(m - 1, -1, -1):
        if l == 0 or _has_sigma_simplex(pts, l, H):
            if l == 0:
                flat = AffineSubspace(pts[0], np.zeros((0, pts.shape[1])))
            else:
                T = max_volume_simplex(pts, l)
                flat = AffineSubspace.from_directions(T.vertices[0], T.vertices[1:] - T.vertices[0])
            if np.all(flat.distance(pts) <= H):
                return flat, l
            return None
    return None
