"""Affine-deviation numbers of functions ``g : P0 -> P0^perp``.

``gamma_g(q, t) = inf_a (1/t^n) int_{B(q,t) cap P0} |g(u) - a(u)| / t du``
over affine ``a``; ``gamma_tilde`` replaces affine maps by n-planes and
measures distances of the lifted points ``(u, g(u))``.
"""

import numpy as np

from ..beta import irls_plane_l1
from ..errors import BadParams, OutOfDomain
from .graph import GraphFunction


def ball_grid(q, t, resolution=64):
    """Cell centres of a regular grid on ``B(q, t)`` in R^n and the cell volume."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    n = q.shape[0]
    if not t > 0 or int(resolution) < 2:
        raise BadParams("need t > 0 and resolution >= 2")
    h = 2.0 * t / resolution
    ax = -t + h * (np.arange(resolution) + 0.5)
    mesh = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    mesh = mesh[np.linalg.norm(mesh, axis=1) <= t]
    return q + mesh, h**n


def _values(g, U):
    if isinstance(g, GraphFunction):
        ok = g.in_domain(U)
        if not np.all(ok):
            raise OutOfDomain("ball leaves the domain of the graph function")
    V = np.asarray(g(U), dtype=float)
    return V.reshape(U.shape[0], -1)


def _affine_l1(U, V, w, t, iters=50, tol=1e-6):
    """IRLS approximation of ``min_a sum w |V - a(U)|`` over affine ``a``."""
    X = np.hstack([U, np.ones((U.shape[0], 1))])

    def fit(rw):
        sw = np.sqrt(rw)[:, None]
        coef, *_ = np.linalg.lstsq(X * sw, V * sw, rcond=None)
        return coef

    coef = fit(w)
    r = np.linalg.norm(V - X @ coef, axis=1)
    best = float(np.sum(w * r))
    best_coef = coef
    prev = best
    for _ in range(iters):
        if best <= 1e-14 * t * float(np.sum(w)):
            break
        coef = fit(w / (r + tol * t))
        r = np.linalg.norm(V - X @ coef, axis=1)
        obj = float(np.sum(w * r))
        if obj < best:
            best, best_coef = obj, coef
        if abs(prev - obj) <= 1e-12 * max(prev, 1e-300):
            break
        prev = obj
    return best, best_coef


def gamma(g, q, t, resolution=64, iters=50):
    """Upper bound for ``gamma_g(q, t)`` by grid quadrature.

    Parameters
    ----------
    g : GraphFunction or callable
        Maps an ``(m, n)`` array of P0 coordinates to ``(m, N - n)`` values.
    q : array_like, shape (n,)
    t : float
    resolution : int
        Grid nodes per axis across the ball.

    Raises
    ------
    OutOfDomain
        If part of the ball lies outside the graph function's domain.
    """
    U, dv = ball_grid(q, t, resolution)
    V = _values(g, U)
    n = U.shape[1]
    w = np.full(U.shape[0], dv)
    obj, _ = _affine_l1(U, V, w, t, iters)
    return obj / t ** (n + 1)


def gamma_tilde(g, q, t, resolution=64, iters=50):
    """Upper bound for the plane version: distances of ``(u, g(u))`` to the
    IRLS n-plane, integrated over ``B(q, t) cap P0``."""
    U, dv = ball_grid(q, t, resolution)
    V = _values(g, U)
    n = U.shape[1]
    lifted = np.hstack([U, V])
    w = np.full(U.shape[0], dv)
    _, obj = irls_plane_l1(lifted, w, n, t, max_iters=iters)
    return obj / t ** (n + 1)
