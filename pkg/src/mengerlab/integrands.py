"""Curvature integrands K1..K6 on (n+2)-tuples of points.

Every integrand returns the unexponentiated value K; callers raise it to
the exponent ``p`` of the :class:`IntegrandKind`. All kinds vanish on
degenerate tuples (Gram determinant of the edges below
``1e-12 * diam^(2(n+1))``), which also absorbs every division hazard.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParams, DegenerateFace, TooLargeN
from .geometry import AffineSubspace
from .simplex import Simplex, degenerate_mask, edge_volumes, heights

TAGS = ("K1", "K2", "K3", "K4", "K5", "K6")
SYMMETRIC_TAGS = frozenset({"K1", "K2", "K3", "K4", "K5"})
MAX_SYMMETRIZE_N = 6


def default_p(tag, n):
    tag = tag.upper()
    if tag in ("K1", "K2", "K3"):
        return 2.0
    if tag in ("K4", "K5"):
        return float(n * (n + 1))
    if tag == "K6":
        return float(n + 1)
    raise BadParams(f"unknown integrand {tag!r}")


@dataclass(frozen=True)
class IntegrandKind:
    """Integrand tag, intrinsic dimension ``n`` and exponent ``p``.

    ``p`` defaults to the exponent that makes the kind scale invariant:
    2 for K1-K3, ``n(n+1)`` for K4 and K5, ``n+1`` for K6.
    """

    tag: str
    n: int = 1
    p: float = None

    def __post_init__(self):
        tag = str(self.tag).upper()
        if tag not in TAGS:
            raise BadParams(f"unknown integrand {self.tag!r}")
        if int(self.n) < 1:
            raise BadParams("intrinsic dimension must be >= 1")
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "n", int(self.n))
        p = default_p(tag, self.n) if self.p is None else float(self.p)
        if not p > 1:
            raise BadParams(f"exponent p must exceed 1, got {p}")
        object.__setattr__(self, "p", p)

    @property
    def symmetric(self):
        return self.tag in SYMMETRIC_TAGS

    @property
    def arity(self):
        return self.n + 2

    def with_p(self, p):
        return IntegrandKind(self.tag, self.n, p)

    def evaluate(self, tup):
        return evaluate(self, tup)

    def evaluate_batch(self, X):
        return evaluate_batch(self, X)


def _check_shape(kind, X):
    X = np.asarray(X, dtype=float)
    if X.shape[-2] != kind.n + 2:
        raise BadParams(f"{kind.tag} with n={kind.n} needs {kind.n + 2} points, got {X.shape[-2]}")
    if X.shape[-1] <= kind.n:
        raise BadParams(f"ambient dimension {X.shape[-1]} must exceed n={kind.n}")
    return X


def _pair_dists(X):
    diff = X[..., :, None, :] - X[..., None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def tuple_volumes(X):
    """Normalized (n+1)-volume, diameter and degeneracy mask for a batch."""
    X = np.asarray(X, dtype=float)
    m = X.shape[-2] - 1
    vol = edge_volumes(X[..., 1:, :] - X[..., :1, :])
    D = _pair_dists(X)
    diam = D.max(axis=(-1, -2))
    degen = degenerate_mask(vol, diam, m)
    return vol, D, diam, degen


def is_degenerate(tup):
    """Whether the tuple spans at most an n-dimensional flat (numerically)."""
    _, _, _, degen = tuple_volumes(np.asarray(tup, dtype=float)[None])
    return bool(degen[0])


def evaluate_batch(kind, X):
    """Evaluate ``K`` on a batch of tuples.

    Parameters
    ----------
    kind : IntegrandKind
    X : ndarray, shape (B, n+2, N)

    Returns
    -------
    ndarray, shape (B,)
    """
    X = _check_shape(kind, X)
    n = kind.n
    m = n + 1
    vol, D, diam, degen = tuple_volumes(X)
    ok = ~degen
    out = np.zeros(X.shape[:-2])
    if not np.any(ok):
        return out
    Xo, vol, D, diam = X[ok], vol[ok], D[ok], diam[ok]
    hvol = vol / math.factorial(m)
    iu = np.triu_indices(n + 2, 1)
    tag = kind.tag
    if tag == "K1":
        val = hvol / np.prod(D[:, iu[0], iu[1]], axis=-1)
    elif tag == "K2":
        # sum_i 1 / prod_{j != i} |x_j - x_i|^2
        Dsq = D * D
        Dsq[:, np.arange(n + 2), np.arange(n + 2)] = 1.0
        s = np.sum(1.0 / np.prod(Dsq, axis=-1), axis=-1)
        val2 = vol * vol / diam ** (n * (n + 1)) * s / (n + 2)
        val = np.sqrt(val2)
    elif tag == "K3":
        val = hvol / diam ** ((n + 1) * (n + 2) // 2)
    elif tag == "K4":
        area = np.zeros_like(hvol)
        for i in range(n + 2):
            keep = [j for j in range(n + 2) if j != i]
            F = Xo[:, keep]
            area += edge_volumes(F[:, 1:] - F[:, :1]) / math.factorial(n)
        val = hvol / (area * diam * diam)
    elif tag == "K5":
        val = hvol / diam ** (n + 2)
    else:  # K6
        F = Xo[:, : n + 1]
        fvol = edge_volumes(F[:, 1:] - F[:, :1])
        h = vol / fvol
        val = h / np.prod(D[:, n + 1, : n + 1], axis=-1)
    out[ok] = val
    return out


def evaluate(kind, tup):
    """Value of ``K`` (not ``K^p``) on a single tuple of ``n+2`` points."""
    return float(evaluate_batch(kind, np.asarray(tup, dtype=float)[None])[0])


@dataclass(frozen=True)
class SymmetrizedIntegrand:
    """Permutation-averaged integrand.

    Evaluates ``(mean_sigma K^p(x_sigma))^(1/p)`` over all ``(n+2)!``
    orderings, so the result is invariant under permuting the input.
    """

    base: IntegrandKind
    perms: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        n = self.base.n
        if n > MAX_SYMMETRIZE_N:
            raise TooLargeN(f"(n+2)! too large for n={n}")
        perms = np.array(list(itertools.permutations(range(n + 2))), dtype=np.int64)
        object.__setattr__(self, "perms", perms)

    tag = property(lambda self: "sym" + self.base.tag)
    n = property(lambda self: self.base.n)
    p = property(lambda self: self.base.p)
    arity = property(lambda self: self.base.n + 2)
    symmetric = property(lambda self: True)

    def with_p(self, p):
        return SymmetrizedIntegrand(self.base.with_p(p))

    def evaluate_batch(self, X):
        X = _check_shape(self.base, X)
        p = self.base.p
        acc = np.zeros(X.shape[:-2])
        for perm in self.perms:
            acc += evaluate_batch(self.base, X[:, perm]) ** p
        return (acc / len(self.perms)) ** (1.0 / p)

    def evaluate(self, tup):
        return float(self.evaluate_batch(np.asarray(tup, dtype=float)[None])[0])


def symmetrize(kind):
    """Permutation-symmetrized evaluator for ``kind`` (``n <= 6``)."""
    return SymmetrizedIntegrand(kind)


def as_evaluator(kind):
    """Accept an IntegrandKind, a symmetrized evaluator or a tag string."""
    if isinstance(kind, (IntegrandKind, SymmetrizedIntegrand)):
        return kind
    return IntegrandKind(kind)


# ---------------------------------------------------------------------------
# propriety diagnostics


@dataclass
class PropertyReport:
    """Outcome of the propriety diagnostics for one kind and exponent.

    Attributes
    ----------
    scaling_violation, translation_violation : float
        Max relative deviation over the random tuples.
    simplex_ratios : dict
        ``C -> max (d(w, aff)/t)^p / (t^{n(n+1)} K^p)`` over random
        (n, t/C)-simplices in ``B(x, Ct)``.
    fitted_c, fitted_l : float
        Least squares fit of ``log ratio = log c + l log C``.
    """

    tag: str
    n: int
    p: float
    samples: int
    scaling_violation: float
    translation_violation: float
    simplex_ratios: dict
    fitted_c: float
    fitted_l: float
    tol: float = 1e-9

    @property
    def scaling_ok(self):
        return self.scaling_violation <= self.tol

    @property
    def translation_ok(self):
        return self.translation_violation <= self.tol

    @property
    def is_proper(self):
        finite = all(np.isfinite(v) for v in self.simplex_ratios.values())
        return self.scaling_ok and self.translation_ok and finite

    def to_dict(self):
        return {
            "tag": self.tag,
            "n": self.n,
            "p": self.p,
            "samples": self.samples,
            "scaling_violation": self.scaling_violation,
            "translation_violation": self.translation_violation,
            "simplex_ratios": {str(k): v for k, v in self.simplex_ratios.items()},
            "fitted_c": self.fitted_c,
            "fitted_l": self.fitted_l,
            "is_proper": self.is_proper,
        }


def random_tuples(rng, count, n, N=None, spread=1.0):
    """Gaussian random tuples, shape ``(count, n+2, N)`` with ``N = n+1`` default."""
    N = n + 1 if N is None else N
    return rng.normal(scale=spread, size=(count, n + 2, N))


def _rel_violation(a, b):
    scale = np.maximum(np.abs(b), 1e-300)
    mask = np.abs(b) > 0
    if not np.any(mask):
        return float(np.max(np.abs(a - b)))
    return float(np.max(np.abs(a - b)[mask] / scale[mask]))


def _random_sigma_simplex(rng, n, N, C, t, max_tries=10000):
    """Rejection sample an (n, t/C)-simplex plus a point w, all in B(0, Ct)."""
    R = C * t
    for _ in range(max_tries):
        dirs = rng.normal(size=(n + 2, N))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = R * rng.random(n + 2) ** (1.0 / N)
        pts = dirs * radii[:, None]
        try:
            h = heights(Simplex(pts[: n + 1]))
        except DegenerateFace:
            continue
        if np.all(h >= t / C):
            return pts
    raise BadParams("could not sample a well-separated simplex")


def check_propriety(kind, p=None, sample_count=1000, seed=0, N=None, C_values=(2.0, 4.0, 8.0)):
    """Empirical check of the scaling, translation and simplex laws.

    Parameters
    ----------
    kind : IntegrandKind or str
    p : float, optional
        Exponent to test (defaults to the kind's own).
    sample_count : int
    seed : int
    N : int, optional
        Ambient dimension (default ``n + 1``).
    C_values : sequence of float
        Separation constants for the simplex law.

    Returns
    -------
    PropertyReport
    """
    kind = as_evaluator(kind)
    if isinstance(kind, IntegrandKind) and p is not None:
        kind = kind.with_p(p)
    p = kind.p
    n = kind.n
    N = n + 1 if N is None else N
    rng = np.random.default_rng(seed)

    X = random_tuples(rng, sample_count, n, N)
    base = kind.evaluate_batch(X) ** p
    scales = np.exp(rng.uniform(np.log(0.05), np.log(20.0), size=sample_count))
    scaled = scales ** (n * (n + 1)) * kind.evaluate_batch(X * scales[:, None, None]) ** p
    shifts = rng.normal(scale=5.0, size=(sample_count, 1, N))
    moved = kind.evaluate_batch(X + shifts) ** p

    ratios = {}
    t = 1.0
    per_C = max(50, sample_count // 10)
    for C in C_values:
        worst = 0.0
        for _ in range(per_C):
            pts = _random_sigma_simplex(rng, n, N, C, t)
            flat = AffineSubspace.from_directions(pts[0], pts[1 : n + 1] - pts[0])
            w = pts[n + 1]
            lhs = (flat.distance(w) / t) ** p
            k = kind.evaluate(pts) ** p
            if lhs == 0.0:
                continue
            rhs = t ** (n * (n + 1)) * k
            worst = max(worst, lhs / rhs if rhs > 0 else math.inf)
        ratios[float(C)] = float(worst)
    Cs = np.array(sorted(ratios))
    vals = np.array([ratios[c] for c in Cs])
    if np.all(np.isfinite(vals)) and np.all(vals > 0):
        slope, icpt = np.polyfit(np.log(Cs), np.log(vals), 1)
        fitted_c, fitted_l = float(np.exp(icpt)), float(slope)
    else:
        fitted_c, fitted_l = math.inf, math.nan
    return PropertyReport(
        tag=kind.tag,
        n=n,
        p=p,
        samples=sample_count,
        scaling_violation=_rel_violation(scaled, base),
        translation_violation=_rel_violation(moved, base),
        simplex_ratios=ratios,
        fitted_c=fitted_c,
        fitted_l=fitted_l,
    )
