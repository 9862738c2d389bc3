"""Stopping-time data on a normalized measure.

For every sample point ``x`` and grid scale ``t`` we decide whether
``(x, t)`` belongs to the total stopping set: enough mass
(``delta(B(x,t)) >= lambda/2``), flat (``beta_{1;k}(x,t) < 2 eps``) and
with a witness plane that is both close to the data
(``beta^P_{1;k} <= 2 eps``) and not tilted against ``P0`` by more than
``alpha``. From this table follow the stopping height ``h``, the
distance-like functions ``d`` and ``D`` and the partition labels.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..beta import ScaleGrid, fit_plane_l2, irls_plane_l1
from .._parallel import map_ordered, resolve_threads
from ..errors import BadParams, EmptyMeasure
from ..geometry import AffineSubspace, angle
from ..measure import DiscreteMeasure

SUPPORT_RADIUS = 4.5
TOP_SCALE = 49.0
SCALES_PER_OCTAVE = 3
DEFAULT_LEVELS = 24
MIN_LEVELS = 7
LABELS = ("Z", "F1", "F2", "F3", "U")


def default_besicovitch(N):
    """Crude configurable stand-in for the Besicovitch constant of R^N."""
    return 5.0**N


def default_lambda(n, N0):
    return min(1e-10 / (600.0**n * N0), 2.0 / 50.0**n)


@dataclass(frozen=True)
class Transform:
    """``x_normalized = (x - center) * scale``; masses divided by ``mass``."""

    center: np.ndarray
    scale: float
    mass: float

    def forward(self, x):
        return (np.asarray(x, dtype=float) - self.center) * self.scale

    def inverse(self, y):
        return np.asarray(y, dtype=float) / self.scale + self.center

    def to_dict(self):
        return {"center": self.center.tolist(), "scale": self.scale, "mass": self.mass}


def normalize_measure(mu):
    """Centre at the weighted centroid, fit the support in ``B(0, 4.5)`` and
    rescale masses to total 1."""
    c = (mu.weights @ mu.points) / mu.total_mass
    r = float(np.max(np.linalg.norm(mu.points - c, axis=1)))
    s = SUPPORT_RADIUS / r if r > 0 else 1.0
    tr = Transform(c, s, mu.total_mass)
    nu = DiscreteMeasure(tr.forward(mu.points), mu.weights / mu.total_mass, mu.n)
    return nu, tr


def default_grid(resolution, levels=DEFAULT_LEVELS):
    """Scales ``49 * 2^(-j/3)`` kept above ``4 * resolution``.

    With three steps per octave the grid is closed under multiplication by
    4 and every window ``[t/4, t/3]`` contains grid points.
    """
    t = TOP_SCALE * 2.0 ** (-np.arange(levels) / SCALES_PER_OCTAVE)
    keep = t >= 4 * resolution if math.isfinite(resolution) else np.ones_like(t, dtype=bool)
    keep[:MIN_LEVELS] = True
    return np.sort(t[keep])


@dataclass(frozen=True)
class StoppingParams:
    """Parameters of the stopping-time construction.

    Parameters
    ----------
    epsilon : float
        Flatness threshold (> 0 for a non-empty stopping set).
    alpha : float
        Tilt bound, ``0 < alpha <= 1/4``.
    k : float
        Ball enlargement for the beta numbers, ``k > 2``.
    lambda_delta : float, optional
        Density threshold; defaults to a tiny value derived from N0.
    scales : ScaleGrid or array_like, optional
        Explicit scale grid in normalized units.
    P0 : AffineSubspace, optional
        Reference plane through the origin of the normalized frame. Default
        is the least-squares plane of the whole normalized measure.
    N0 : float, optional
        Besicovitch constant used in the default ``lambda_delta``.
    normalize : bool
        Apply the built-in centring and rescaling.
    """

    epsilon: float
    alpha: float = 0.25
    k: float = 4.0
    lambda_delta: float = None
    scales: object = None
    P0: AffineSubspace = None
    N0: float = None
    normalize: bool = True
    irls_iters: int = 30
    threads: int = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise BadParams("epsilon must be >= 0")
        if not 0 < self.alpha <= 0.25:
            raise BadParams("alpha must lie in (0, 1/4]")
        if not self.k > 2:
            raise BadParams("k must exceed 2")


@dataclass(eq=False)
class StoppingState:
    """Tables of the stopping-time construction on a normalized measure.

    Attributes
    ----------
    mu : DiscreteMeasure
        Normalized measure (support in ``B(0, 5)``, mass 1).
    transform : Transform
    P0 : AffineSubspace
    scales : ndarray (J,)
    delta, beta1, beta_p0 : ndarray (M, J)
    member : ndarray of bool (M, J)
        Membership in the total stopping set.
    witness : dict
        ``(i, j) -> AffineSubspace`` for members.
    h : ndarray (M,)
    in_S : ndarray of bool (M, J)
        ``member`` and ``t >= h``.
    s_min : ndarray (M,)
        Smallest ``t`` with ``(x_i, t)`` in S (0 on Z, inf if none).
    d : ndarray (M,)
    labels : ndarray of str (M,)
    """

    mu: DiscreteMeasure
    transform: Transform
    params: StoppingParams
    P0: AffineSubspace
    lam: float
    scales: np.ndarray
    delta: np.ndarray
    beta1: np.ndarray
    beta_p0: np.ndarray
    ok_strict: np.ndarray
    member: np.ndarray
    witness: dict
    h: np.ndarray
    in_S: np.ndarray
    s_min: np.ndarray
    d: np.ndarray
    labels: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.mu.n

    @property
    def is_Z(self):
        return self.h == 0

    def project(self, x):
        """Coordinates of ``pi(x)`` in the P0 basis."""
        return np.asarray(x, dtype=float) @ self.P0.basis.T

    def perp(self, x):
        """``pi^perp(x)`` as ambient vectors."""
        x = np.asarray(x, dtype=float)
        return x - self.project(x) @ self.P0.basis

    @property
    def u(self):
        if "u" not in self._cache:
            self._cache["u"] = self.project(self.mu.points)
        return self._cache["u"]

    def d_at(self, x):
        """``d(x) = min over S of |X - x| + t`` for arbitrary points."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        fin = np.isfinite(self.s_min)
        if not np.any(fin):
            return np.full(x.shape[0], math.inf)
        X = self.mu.points[fin]
        s = self.s_min[fin]
        out = np.empty(x.shape[0])
        for a in range(0, x.shape[0], 512):
            blk = x[a : a + 512]
            dist = np.linalg.norm(blk[:, None, :] - X[None], axis=-1)
            out[a : a + 512] = np.min(dist + s, axis=1)
        return out

    def D(self, u):
        """``D(u) = min over S of |pi(X) - u| + t`` for P0 coordinates ``u``."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        fin = np.isfinite(self.s_min)
        if not np.any(fin):
            return np.full(u.shape[0], math.inf)
        U = self.u[fin]
        s = self.s_min[fin]
        out = np.empty(u.shape[0])
        for a in range(0, u.shape[0], 512):
            blk = u[a : a + 512]
            dist = np.linalg.norm(blk[:, None, :] - U[None], axis=-1)
            out[a : a + 512] = np.min(dist + s, axis=1)
        return out

    def D_box(self, lo, hi):
        """Exact ``inf_{u in box} D(u)`` for an axis-aligned box in P0 coords."""
        fin = np.isfinite(self.s_min)
        if not np.any(fin):
            return math.inf
        U = self.u[fin]
        gap = np.maximum(np.maximum(lo - U, U - hi), 0.0)
        return float(np.min(np.linalg.norm(gap, axis=1) + self.s_min[fin]))

    def label_masses(self):
        w = self.mu.weights
        return {lab: float(np.sum(w[self.labels == lab])) for lab in LABELS}

    def witness_plane(self, i, t):
        """Witness plane for ``(x_i, t)``; computed afresh off the grid."""
        j = np.flatnonzero(np.isclose(self.scales, t, rtol=1e-12, atol=0))
        if j.size and (i, int(j[0])) in self.witness:
            return self.witness[(i, int(j[0]))]
        return evaluate_pair(self, self.mu.points[i], t)[2]

    def summary(self):
        return {
            "n_points": int(self.mu.size),
            "n_scales": int(self.scales.size),
            "members": int(self.member.sum()),
            "n_Z": int(np.sum(self.is_Z)),
            "label_counts": {lab: int(np.sum(self.labels == lab)) for lab in LABELS},
            "label_masses": self.label_masses(),
        }

    def to_dict(self):
        return {
            "params": {
                "epsilon": self.params.epsilon,
                "alpha": self.params.alpha,
                "k": self.params.k,
                "lambda_delta": self.lam,
            },
            "transform": self.transform.to_dict(),
            "P0": {"base": self.P0.base.tolist(), "basis": self.P0.basis.tolist()},
            "scales": self.scales.tolist(),
            "summary": self.summary(),
            "points": [
                {
                    "id": i,
                    "label": str(self.labels[i]),
                    "h": float(self.h[i]),
                    "d": float(self.d[i]),
                    "s_min": float(self.s_min[i]) if math.isfinite(self.s_min[i]) else None,
                    "member_scales": self.scales[self.member[i]].tolist(),
                }
                for i in range(self.mu.size)
            ],
        }


def _plane_stats(pts, w, t, n, P0, eps, alpha, iters):
    """beta_1 via IRLS plus the two candidate checks for one ball."""
    P, obj = irls_plane_l1(pts, w, n, t, max_iters=iters, reference=P0)
    b1 = obj / t ** (n + 1)
    bp0 = float(np.sum(w * P0.distance(pts))) / t ** (n + 1)
    ang = angle(P, P0)
    # candidates: the fitted plane and P0 itself (angle 0)
    ok2 = (b1 <= 2 * eps and ang <= alpha) or bp0 <= 2 * eps
    ok1 = (b1 <= eps and ang < 0.75 * alpha) or bp0 <= eps
    if b1 <= 2 * eps and ang <= alpha:
        wit = P
    elif bp0 <= 2 * eps:
        wit = P0
    else:
        wit = None
    return b1, bp0, ok2, ok1, wit


def evaluate_pair(state_or_ctx, x, t):
    """Membership data for a single ``(x, t)`` (not necessarily on the grid).

    Returns ``(is_member, beta1, witness_plane_or_None)``.
    """
    st = state_or_ctx
    mu, P0, prm = st.mu, st.P0, st.params
    idx = mu.ball_indices(x, prm.k * t)
    if idx.size == 0:
        return False, 0.0, None
    pts, w = mu.points[idx], mu.weights[idx]
    b1, _, ok2, _, wit = _plane_stats(pts, w, t, mu.n, P0, prm.epsilon, prm.alpha, prm.irls_iters)
    dens = float(np.sum(mu.weights[mu.ball_indices(x, t)])) / t**mu.n
    member = dens >= st.lam / 2 and b1 < 2 * prm.epsilon and ok2
    return member, b1, wit


def _membership(mu, P0, scales, prm, lam, threads):
    M, J = mu.size, scales.size
    n = mu.n
    delta = np.zeros((M, J))
    beta1 = np.zeros((M, J))
    beta_p0 = np.zeros((M, J))
    ok2 = np.zeros((M, J), dtype=bool)
    ok1 = np.zeros((M, J), dtype=bool)
    witness = {}
    for j, t in enumerate(scales):
        delta[:, j] = mu.ball_masses(mu.points, t) / t**n
        balls = mu.ball_indices_many(mu.points, prm.k * t)
        cache = {}
        keys = [b.tobytes() for b in balls]
        uniq = {}
        for key, b in zip(keys, balls):
            uniq.setdefault(key, b)

        def job(item):
            key, b = item
            return key, _plane_stats(mu.points[b], mu.weights[b], t, n, P0,
                                     prm.epsilon, prm.alpha, prm.irls_iters)

        for key, res in map_ordered(job, list(uniq.items()), threads):
            cache[key] = res
        for i, key in enumerate(keys):
            b1, bp0, o2, o1, wit = cache[key]
            beta1[i, j], beta_p0[i, j], ok2[i, j], ok1[i, j] = b1, bp0, o2, o1
            if wit is not None:
                witness[(i, j)] = wit
    member = (delta >= lam / 2) & (beta1 < 2 * prm.epsilon) & ok2
    witness = {key: P for key, P in witness.items() if member[key]}
    return delta, beta1, beta_p0, ok1, member, witness


def _stopping_height(points, scales, member):
    """``h(x) = max min(4 tau, 50)`` over non-members ``(y, tau)`` with
    ``tau < 50/3`` and ``|x - y| < tau/3``; 0 when there is none."""
    M = points.shape[0]
    h = np.zeros(M)
    for j, tau in enumerate(scales):
        if tau >= 50.0 / 3.0:
            continue
        bad = np.flatnonzero(~member[:, j])
        if bad.size == 0:
            continue
        val = min(4.0 * tau, 50.0)
        Y = points[bad]
        for a in range(0, M, 1024):
            blk = points[a : a + 1024]
            dist = np.linalg.norm(blk[:, None, :] - Y[None], axis=-1)
            hit = np.any(dist < tau / 3.0, axis=1)
            h[a : a + 1024] = np.where(hit, np.maximum(h[a : a + 1024], val), h[a : a + 1024])
    return h


def _labels(points, scales, h, delta, beta1, ok1, lam, eps):
    """First matching clause over the windows ``tau in [h/5, h/2]``,
    ``|x - y| <= tau/2``."""
    M = points.shape[0]
    labels = np.full(M, "Z", dtype="<U2")
    for i in np.flatnonzero(h > 0):
        js = np.flatnonzero((scales >= h[i] / 5 * (1 - 1e-12)) & (scales <= h[i] / 2 * (1 + 1e-12)))
        f1 = f2 = f3 = False
        dist = np.linalg.norm(points - points[i], axis=1)
        for j in js:
            ys = np.flatnonzero(dist <= scales[j] / 2 * (1 + 1e-12))
            f1 |= bool(np.any(delta[ys, j] <= lam))
            f2 |= bool(np.any(beta1[ys, j] >= eps))
            f3 |= bool(np.any(~ok1[ys, j]))
        labels[i] = "F1" if f1 else "F2" if f2 else "F3" if f3 else "U"
    return labels


def build_stopping_state(mu, params):
    """Run the stopping-time construction.

    Parameters
    ----------
    mu : DiscreteMeasure
    params : StoppingParams

    Returns
    -------
    StoppingState

    Raises
    ------
    EmptyMeasure
    """
    if mu is None or mu.size == 0:
        raise EmptyMeasure("no atoms")
    if params.normalize:
        nu, tr = normalize_measure(mu)
    else:
        nu = mu
        tr = Transform(np.zeros(mu.N), 1.0, 1.0)
    n, N = nu.n, nu.N
    if params.P0 is None:
        fit = fit_plane_l2(nu.points, nu.weights, n)
        P0 = AffineSubspace(np.zeros(N), fit.basis, fit.normal)
    else:
        P0 = params.P0
        if P0.dim != n or P0.ambient_dim != N:
            raise BadParams("reference plane has the wrong dimension")
        if np.linalg.norm(P0.project(np.zeros(N))) > 1e-12:
            raise BadParams("reference plane must pass through the origin")
    N0 = default_besicovitch(N) if params.N0 is None else params.N0
    lam = default_lambda(n, N0) if params.lambda_delta is None else float(params.lambda_delta)
    if params.scales is None:
        scales = default_grid(nu.median_spacing)
    elif isinstance(params.scales, ScaleGrid):
        scales = params.scales.values()
    else:
        scales = np.sort(np.asarray(params.scales, dtype=float))
    if np.any(scales <= 0) or np.any(scales >= 50):
        raise BadParams("scales must lie in (0, 50)")

    threads = resolve_threads(params.threads)
    delta, beta1, beta_p0, ok1, member, witness = _membership(nu, P0, scales, params, lam, threads)
    h = _stopping_height(nu.points, scales, member)
    in_S = member & (scales[None, :] >= h[:, None] * (1 - 1e-12))
    s_min = np.full(nu.size, math.inf)
    for i in range(nu.size):
        if h[i] == 0:
            s_min[i] = 0.0
        elif np.any(in_S[i]):
            s_min[i] = scales[np.argmax(in_S[i])]
    labels = _labels(nu.points, scales, h, delta, beta1, ok1, lam, params.epsilon)
    st = StoppingState(
        mu=nu, transform=tr, params=params, P0=P0, lam=lam, scales=scales,
        delta=delta, beta1=beta1, beta_p0=beta_p0, ok_strict=ok1, member=member,
        witness=witness, h=h, in_S=in_S, s_min=s_min, d=np.zeros(nu.size), labels=labels,
    )
    st.d = st.d_at(nu.points)
    return st
