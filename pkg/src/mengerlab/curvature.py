"""Integral Menger curvature of discrete measures: exact enumeration,
Monte Carlo estimation and the localized version on separated tuples.

The discrete curvature is the sum over ordered index tuples
``sum K^p(x_{i_0}, ..., x_{i_{n+1}}) w_{i_0} ... w_{i_{n+1}}``.
Tuples with a repeated index are degenerate and contribute zero.

Reductions run over fixed index blocks in ascending order, so results do
not depend on the number of worker threads.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._parallel import map_ordered, resolve_threads
from .errors import BadParams, DimMismatch, TooLarge
from .integrands import IntegrandKind

DEFAULT_CAP = 10**8
EXACT_BLOCK = 1 << 17
MC_BLOCK = 1 << 14
SEP_RTOL = 1e-12


@dataclass(frozen=True)
class CurvatureEstimate:
    value: float
    stderr: float
    tuples_evaluated: int
    method: str

    def to_dict(self):
        return {
            "value": self.value,
            "stderr": self.stderr,
            "method": self.method,
            "tuples": self.tuples_evaluated,
        }


@dataclass(frozen=True)
class LocalRegion:
    """Centre ``x``, scale ``t`` and separation factor ``kappa > 1``."""

    x: np.ndarray
    t: float
    kappa: float

    def __post_init__(self):
        if not self.t > 0 or not self.kappa > 1:
            raise BadParams("local region needs t > 0 and kappa > 1")
        x = np.array(self.x, dtype=float).reshape(-1)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)


def resolve_kind(kind, n, p=None):
    """Normalise ``kind`` (tag, IntegrandKind or symmetrized) for dimension n."""
    if isinstance(kind, str):
        kind = IntegrandKind(kind, n)
    if kind.n != n:
        raise DimMismatch(f"integrand is for n={kind.n}, measure has n={n}")
    if p is not None and float(p) != kind.p:
        kind = kind.with_p(p)
    return kind


def _combo_blocks(M, arity, block=EXACT_BLOCK):
    """Yield arrays of strictly increasing index tuples, lexicographic order."""
    if M < arity:
        return
    rest = np.array(list(combinations(range(M), arity - 1)), dtype=np.int64).reshape(-1, arity - 1)
    starts = np.searchsorted(rest[:, 0], np.arange(M) + 1)
    buf, size = [], 0
    for i0 in range(M):
        tail = rest[starts[i0] :]
        if tail.shape[0] == 0:
            continue
        buf.append(np.column_stack([np.full(tail.shape[0], i0, dtype=np.int64), tail]))
        size += tail.shape[0]
        if size >= block:
            yield np.vstack(buf)
            buf, size = [], 0
    if buf:
        yield np.vstack(buf)


def _ordered_blocks(M, arity, block=EXACT_BLOCK):
    """Yield all ordered index tuples in lexicographic order."""
    total = M**arity
    shape = (M,) * arity
    for s in range(0, total, block):
        flat = np.arange(s, min(total, s + block), dtype=np.int64)
        yield np.column_stack(np.unravel_index(flat, shape))


def _separated(X, min_sep):
    diff = X[:, :, None, :] - X[:, None, :, :]
    D = np.sqrt(np.sum(diff * diff, axis=-1))
    iu = np.triu_indices(X.shape[1], 1)
    return np.all(D[:, iu[0], iu[1]] >= min_sep * (1 - SEP_RTOL), axis=-1)


def _exact_sum(points, weights, kind, threads, ordered, min_sep=None):
    M = points.shape[0]
    arity = kind.n + 2
    p = kind.p
    use_combos = kind.symmetric and not ordered
    blocks = list(_combo_blocks(M, arity) if use_combos else _ordered_blocks(M, arity))
    factor = math.factorial(arity) if use_combos else 1.0

    def job(idx):
        X = points[idx]
        vals = kind.evaluate_batch(X) ** p * np.prod(weights[idx], axis=1)
        if min_sep is not None:
            vals = vals * _separated(X, min_sep)
        return float(np.sum(vals)), idx.shape[0]

    parts = map_ordered(job, blocks, threads)
    total = 0.0
    count = 0
    for s, c in parts:
        total += s
        count += c
    return total * factor, count


def _check_cap(M, arity, cap):
    if M**arity > cap:
        raise TooLarge(f"{M}^{arity} = {M ** arity} ordered tuples exceed the cap {int(cap)}")


def curvature_exact(mu, kind, p=None, cap=DEFAULT_CAP, threads=None, ordered=False):
    """Exact discrete ``M_{K^p}(mu)``.

    Parameters
    ----------
    mu : DiscreteMeasure
    kind : str, IntegrandKind or SymmetrizedIntegrand
    p : float, optional
        Overrides the kind's exponent.
    cap : int
        Maximum number of ordered tuples ``M^(n+2)``.
    threads : int, optional
    ordered : bool
        Force enumeration of all ordered tuples even for symmetric kinds.
        By default symmetric kinds sum over increasing tuples and multiply
        by ``(n+2)!``, which is the same ordered sum.

    Raises
    ------
    TooLarge
    """
    kind = resolve_kind(kind, mu.n, p)
    arity = kind.n + 2
    _check_cap(mu.size, arity, cap)
    total, count = _exact_sum(mu.points, mu.weights, kind, resolve_threads(threads), ordered)
    return CurvatureEstimate(total, 0.0, count, "exact")


def curvature_local(mu, kind, region, p=None, cap=DEFAULT_CAP, threads=None, ordered=False):
    """Sum over tuples in ``B(x, kappa t)`` with pairwise distances ``>= t/kappa``."""
    kind = resolve_kind(kind, mu.n, p)
    idx = mu.ball_indices(region.x, region.kappa * region.t)
    arity = kind.n + 2
    if idx.size < arity:
        return 0.0
    _check_cap(idx.size, arity, cap)
    total, _ = _exact_sum(
        mu.points[idx], mu.weights[idx], kind, resolve_threads(threads), ordered,
        min_sep=region.t / region.kappa,
    )
    return total


def _block_stats(vals):
    n = vals.shape[0]
    mean = float(np.mean(vals))
    m2 = float(np.sum((vals - mean) ** 2))
    return n, mean, m2


def _merge_stats(a, b):
    """Chan et al. pairwise combination of (count, mean, M2)."""
    na, ma, qa = a
    nb, mb, qb = b
    n = na + nb
    d = mb - ma
    return n, ma + d * nb / n, qa + qb + d * d * na * nb / n


def curvature_mc(mu, kind, samples=100_000, seed=0, p=None, threads=None, block_size=MC_BLOCK):
    """Monte Carlo estimate of ``M_{K^p}(mu)``.

    Index tuples are drawn i.i.d. with per-coordinate probability
    proportional to the weights; the estimate is
    ``(total mass)^(n+2) * mean K^p``. Block ``b`` draws from a Philox
    stream keyed by ``(seed, b)``, and block statistics are merged in
    block order, so the result is bit-identical for any thread count.
    """
    samples = int(samples)
    if samples < 100:
        raise BadParams("Monte Carlo needs at least 100 samples")
    if int(seed) < 0:
        raise BadParams("seed must be non-negative")
    kind = resolve_kind(kind, mu.n, p)
    arity = kind.n + 2
    M = mu.size
    probs = mu.weights / mu.total_mass
    pts = mu.points
    nblocks = -(-samples // block_size)

    def job(b):
        nb = min(block_size, samples - b * block_size)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), b])))
        idx = rng.choice(M, size=(nb, arity), p=probs)
        vals = kind.evaluate_batch(pts[idx]) ** kind.p
        return _block_stats(vals)

    stats = map_ordered(job, list(range(nblocks)), resolve_threads(threads))
    acc = stats[0]
    for s in stats[1:]:
        acc = _merge_stats(acc, s)
    n, mean, m2 = acc
    scale = mu.total_mass**arity
    var = m2 / (n - 1) if n > 1 else 0.0
    return CurvatureEstimate(scale * mean, scale * math.sqrt(var / n), n, "mc")


__all__ = [
    "CurvatureEstimate",
    "LocalRegion",
    "curvature_exact",
    "curvature_local",
    "curvature_mc",
    "resolve_kind",
    "resolve_threads",
]
