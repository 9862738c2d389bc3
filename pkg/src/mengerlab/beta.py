"""Jones-type beta numbers of a discrete measure and their multiscale sums.

``beta_{p;k}^P(x, t) = ((1/t^n) sum_{y in B(x,kt)} w_y (d(y,P)/t)^p)^(1/p)``
and ``beta_{p;k}(x, t)`` is the infimum over affine n-planes ``P``.
For ``p = 2`` the infimum is exact (weighted PCA); for ``p = 1`` it is
approximated from above by iteratively reweighted least squares.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadParams, EmptyBall
from .geometry import AffineSubspace
from .measure import Ball

EXACT_L2 = "exact_l2"
UPPER_BOUND_L1 = "upper_bound_l1"
UPPER_BOUND = "upper_bound"


@dataclass(frozen=True)
class BetaResult:
    value: float
    plane: AffineSubspace
    exactness: str


@dataclass(frozen=True)
class ScaleGrid:
    """Geometric grid of ``count`` scales from ``t_min`` to ``t_max``."""

    t_min: float
    t_max: float
    count: int
    spacing: str = "geometric"

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max) or int(self.count) < 2:
            raise BadParams("scale grid needs 0 < t_min < t_max and count >= 2")
        if self.spacing not in ("geometric", "dyadic"):
            raise BadParams(f"unknown spacing {self.spacing!r}")
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def parse(cls, text):
        """Parse ``"min:max:count"``."""
        try:
            a, b, c = text.split(":")
            return cls(float(a), float(b), int(c))
        except ValueError as exc:
            raise BadParams(f"bad scale spec {text!r}; expected min:max:count") from exc

    def values(self):
        return np.geomspace(self.t_min, self.t_max, self.count)

    @property
    def dlog(self):
        """Constant log-spacing used as the quadrature weight for dt/t."""
        return math.log(self.t_max / self.t_min) / (self.count - 1)

    def scaled(self, s):
        return ScaleGrid(self.t_min * s, self.t_max * s, self.count, self.spacing)


def _complete_basis(dirs, n, N, reference):
    """Extend orthonormal rows ``dirs`` to ``n`` rows.

    Candidates are the reference plane's basis (if any) followed by the
    coordinate axes; each is orthogonalised against what is already there.
    """
    rows = [d for d in dirs]
    cands = []
    if reference is not None:
        cands.extend(reference.basis)
    cands.extend(np.eye(N))
    for c in cands:
        if len(rows) >= n:
            break
        v = np.array(c, dtype=float)
        for _ in range(2):
            for r in rows:
                v = v - (v @ r) * r
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            rows.append(v / nv)
    return np.array(rows[:n])


def fit_plane_l2(points, weights, n, reference=None):
    """Weighted least-squares n-plane through the weighted centroid.

    Returns an :class:`AffineSubspace` spanned by the top ``n`` principal
    directions of the weighted scatter. When the scatter has rank below
    ``n`` the basis is completed from ``reference`` or the coordinate axes.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.asarray(weights, dtype=float)
    if P.shape[0] == 0:
        raise EmptyBall("no atoms to fit")
    N = P.shape[1]
    c = (w @ P) / w.sum()
    X = P - c
    S = (X * w[:, None]).T @ X
    ev, V = np.linalg.eigh(S)
    scale = max(float(ev[-1]), 0.0)
    rank = int(np.sum(ev > 1e-12 * scale)) if scale > 0 else 0
    if rank >= n:
        top = V[:, ::-1][:, :n].T
        normal = V[:, : N - n].T
        return AffineSubspace(c, top, normal)
    dirs = list(V[:, ::-1][:, :rank].T)
    basis = _complete_basis(dirs, n, N, reference)
    return AffineSubspace(c, basis)


def _ball_data(mu, x, t, k):
    idx = mu.ball_indices(np.asarray(x, dtype=float), k * t)
    return mu.points[idx], mu.weights[idx]


def _beta_value(dist, w, t, n, p):
    return float((np.sum(w * (dist / t) ** p) / t**n) ** (1.0 / p))


def beta_fixed_plane(mu, x, t, k, p, P):
    """beta number of ``mu`` on ``B(x, kt)`` relative to a fixed plane ``P``."""
    if not t > 0 or p < 1:
        raise BadParams("need t > 0 and p >= 1")
    pts, w = _ball_data(mu, x, t, k)
    if pts.shape[0] == 0:
        return 0.0
    return _beta_value(P.distance(pts), w, t, mu.n, p)


def best_plane_l2(mu, ball, n=None, reference=None):
    """Exact minimiser of ``sum w d(y, P)^2`` over the atoms in ``ball``.

    Raises
    ------
    EmptyBall
    """
    n = mu.n if n is None else n
    idx = mu.ball_indices(ball.center, ball.radius)
    if idx.size == 0:
        raise EmptyBall("ball contains no atoms")
    return fit_plane_l2(mu.points[idx], mu.weights[idx], n, reference)


def beta2(mu, x, t, k, reference=None):
    """``beta_{2;k}(x, t)`` with the exact L2-optimal plane."""
    pts, w = _ball_data(mu, x, t, k)
    if pts.shape[0] == 0:
        raise EmptyBall("ball contains no atoms")
    P = fit_plane_l2(pts, w, mu.n, reference)
    return BetaResult(_beta_value(P.distance(pts), w, t, mu.n, 2.0), P, EXACT_L2)


def irls_plane_l1(points, weights, n, t, max_iters=50, tol=1e-6, reference=None):
    """Approximate the L1-optimal plane by iteratively reweighted fits.

    Weights ``w / (d + tol*t)``; starts at the L2 plane and keeps the best
    plane seen, so the objective never exceeds the L2 plane's.

    Returns
    -------
    (AffineSubspace, float)
        Plane and its objective ``sum w d``.
    """
    P = fit_plane_l2(points, weights, n, reference)
    d = P.distance(points)
    best_obj = float(np.sum(weights * d))
    best = P
    # exact fits (up to roundoff) need no reweighting
    if best_obj <= 1e-14 * t * float(np.sum(weights)):
        return best, best_obj
    prev = best_obj
    for _ in range(max_iters):
        rw = weights / (d + tol * t)
        P = fit_plane_l2(points, rw, n, reference)
        d = P.distance(points)
        obj = float(np.sum(weights * d))
        if obj < best_obj:
            best_obj, best = obj, P
        if abs(prev - obj) <= 1e-12 * max(prev, 1e-300):
            break
        prev = obj
    return best, best_obj


def beta1(mu, x, t, k, max_iters=50, tol=1e-6, reference=None):
    """``beta_{1;k}(x, t)``, an upper bound from the IRLS plane."""
    pts, w = _ball_data(mu, x, t, k)
    if pts.shape[0] == 0:
        raise EmptyBall("ball contains no atoms")
    P, obj = irls_plane_l1(pts, w, mu.n, t, max_iters, tol, reference)
    return BetaResult(obj / t ** (mu.n + 1), P, UPPER_BOUND_L1)


def beta_p(mu, x, t, k, p, reference=None):
    """``beta_{p;k}``: exact for p=2, IRLS for p=1, L2 plane otherwise."""
    if p == 2:
        return beta2(mu, x, t, k, reference)
    if p == 1:
        return beta1(mu, x, t, k, reference=reference)
    pts, w = _ball_data(mu, x, t, k)
    if pts.shape[0] == 0:
        raise EmptyBall("ball contains no atoms")
    P = fit_plane_l2(pts, w, mu.n, reference)
    return BetaResult(_beta_value(P.distance(pts), w, t, mu.n, p), P, UPPER_BOUND)


def beta_table(mu, x, grid, k, p, lam, k0):
    """Per-scale rows ``(t, beta, delta, delta_tilde, indicator)`` at ``x``."""
    x = np.asarray(x, dtype=float)
    rows = []
    for t in grid.values():
        ball = Ball(x, t)
        dt = mu.delta_tilde(ball, k0)
        d = mu.delta(ball)
        try:
            b = beta_p(mu, x, t, k, p).value
        except EmptyBall:
            b = 0.0
        rows.append((float(t), b, d, dt, bool(dt >= lam)))
    return rows


def multiscale_beta(mu, x, grid, k, p, lam, k0, table=False):
    """Discretised ``int beta_{p;k}(x,t)^p 1{delta_tilde >= lam} dt/t``.

    The sum runs over ``grid`` with the constant log-spacing as weight.
    With ``table=True`` also returns the per-scale rows.
    """
    rows = beta_table(mu, x, grid, k, p, lam, k0)
    total = 0.0
    for _, b, _, _, ind in rows:
        if ind:
            total += b**p * grid.dlog
    return (total, rows) if table else total
