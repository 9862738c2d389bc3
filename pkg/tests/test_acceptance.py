"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run directly with ``python3 tests/test_acceptance.py`` or through pytest.
Each check returns ``(ok, detail)``.
"""

import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

import frozen  # noqa: E402
import oracles  # noqa: E402
from test_beta import line_family  # noqa: E402
from mengerlab import (  # noqa: E402
    AffineSubspace,
    DiscreteMeasure,
    IntegrandKind,
    ScaleGrid,
    Simplex,
    angle,
    beta1,
    beta2,
    check_propriety,
    curvature_exact,
    curvature_mc,
    evaluate,
    face,
    generate,
    hausdorff_volume,
    height,
    heights,
    normalized_volume,
)
from mengerlab.construction import (  # noqa: E402
    StoppingParams,
    build_graph,
    build_stopping_state,
    check_whitney,
    coverage_report,
    graph_distances,
    whitney_decompose,
)
from mengerlab.harness import default_scale_grid, global_beta_integral, lipschitz_ladder, verify_global_bound  # noqa: E402

SHAPES = {
    "RIGHT_TRIANGLE": [[0, 0], [1, 0], [0, 1]],
    "RIGHT_TETRAHEDRON": [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
    "EQUILATERAL": [[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]],
    "REGULAR_TETRAHEDRON": (np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / math.sqrt(8)).tolist(),
}


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _random_flat(rng, N, m):
    return AffineSubspace.from_directions(rng.normal(size=N), rng.normal(size=(m, N)))


# ---------------------------------------------------------------------------


def criterion_1():
    start = time.perf_counter()
    worst_closed = 0.0
    for name, verts in SHAPES.items():
        ref = getattr(frozen, name)
        T = Simplex(verts)
        worst_closed = max(worst_closed, _rel(normalized_volume(T), ref["normalized"]),
                           _rel(hausdorff_volume(T), ref["hausdorff"]),
                           float(np.max(np.abs(heights(T) - ref["heights"]) / np.abs(ref["heights"]))))
    rng = np.random.default_rng(2024)
    worst_fact = worst_ratio = 0.0
    for _ in range(1000):
        m = int(rng.integers(2, 5))
        N = int(rng.integers(m, 6))
        T = Simplex(rng.normal(size=(m + 1, N)))
        V = normalized_volume(T)
        h = heights(T)
        for i in range(m + 1):
            worst_fact = max(worst_fact, _rel(h[i] * normalized_volume(face(T, i)), V))
        i, j = sorted(rng.choice(m + 1, size=2, replace=False))
        # vertex i keeps its index in face j (i < j); vertex j drops by one in face i
        lhs = h[i] / height(face(T, j), i)
        rhs = h[j] / height(face(T, i), j - 1)
        worst_ratio = max(worst_ratio, _rel(lhs, rhs))
    elapsed = time.perf_counter() - start
    ok = worst_closed <= 1e-12 and worst_fact <= 1e-9 and worst_ratio <= 1e-9 and elapsed < 5
    return ok, f"closed-form rel {worst_closed:.1e}, factorization {worst_fact:.1e}, ratio {worst_ratio:.1e}, {elapsed:.2f}s"


def criterion_2():
    rng = np.random.default_rng(7)
    kind = IntegrandKind("K1", 1)
    worst = 0.0
    for _ in range(1000):
        tup = rng.normal(size=(3, int(rng.integers(2, 5))))
        c = oracles.menger_curvature(*tup)
        worst = max(worst, abs(evaluate(kind, tup) - c / 4) / c)
    return worst <= 1e-10, f"max |K1 - c/4|/c = {worst:.1e}"


def criterion_3():
    worst = 0.0
    cases = []
    for n in (1, 2):
        for tag, p in (("K1", 2), ("K2", 2), ("K3", 2), ("K4", n * (n + 1)), ("K5", n * (n + 1)), ("K6", n + 1)):
            r = check_propriety(IntegrandKind(tag, n), p=p, sample_count=1000, seed=n)
            worst = max(worst, r.scaling_violation, r.translation_violation)
            cases.append(f"{tag}/n={n}")
    return worst <= 1e-9, f"{len(cases)} kinds, max violation {worst:.1e}"


def criterion_4():
    rng = np.random.default_rng(11)
    sym = tri = sine = 0.0
    for _ in range(1000):
        N = int(rng.integers(2, 6))
        m = int(rng.integers(1, N))
        P, Q, R = (_random_flat(rng, N, m) for _ in range(3))
        sym = max(sym, abs(angle(P, Q) - angle(Q, P)))
        tri = max(tri, angle(P, R) - angle(P, Q) - angle(Q, R))
        d1, d2 = rng.normal(size=(2, N))
        a = angle(AffineSubspace.from_directions(np.zeros(N), d1[None]), AffineSubspace.from_directions(np.zeros(N), d2[None]))
        sine = max(sine, abs(a - oracles.line_sine(d1, d2)))
    ok = sym <= 1e-10 and tri <= 1e-10 and sine <= 1e-10
    return ok, f"symmetry {sym:.1e}, triangle excess {tri:.1e}, sine {sine:.1e}"


def criterion_5():
    seg = generate("segment", n_points=50)
    patch = generate("plane_patch", n=2, n_points=100)
    zero = (beta2(seg, np.array([0.5, 0.0]), 0.2, 4).value == 0.0
            and beta1(seg, np.array([0.5, 0.0]), 0.2, 4).value == 0.0
            and beta2(patch, np.array([0.5, 0.5, 0.0]), 0.2, 4).value == 0.0)
    err2 = err1 = 0.0
    below = 0
    for i in range(20):
        mu = line_family(i)
        t, k = 0.5, 6.0
        ref2 = oracles.sweep_line_beta(mu.points, mu.weights, t, 2)
        ref1 = oracles.sweep_line_beta(mu.points, mu.weights, t, 1)
        err2 = max(err2, abs(beta2(mu, np.zeros(2), t, k).value - ref2))
        b1 = beta1(mu, np.zeros(2), t, k).value
        err1 = max(err1, b1 / ref1 - 1)
        below += b1 < ref1 - 1e-9
    ok = zero and err2 <= 1e-6 and err1 <= 0.02 and below == 0
    return ok, f"coplanar zero {zero}, beta2 abs err {err2:.1e}, beta1 excess {100 * err1:.2f}%"


def criterion_6():
    triple = DiscreteMeasure(SHAPES["EQUILATERAL"], np.ones(3))
    rng = np.random.default_rng(25)
    rand = DiscreteMeasure(rng.normal(size=(25, 2)), rng.uniform(0.2, 1.0, 25))
    targets = [
        ("triple", triple, frozen.CURVATURE_EQUILATERAL),
        ("random25", rand, oracles.ordered_curvature(rand.points, rand.weights, oracles.k1_from_sides, 2)),
    ]
    parts = []
    ok = True
    for name, mu, exact in targets:
        hits = 0
        for seed in range(100):
            est = curvature_mc(mu, "K1", samples=100_000, seed=seed)
            hits += abs(est.value - exact) <= 3 * est.stderr
        a = curvature_mc(mu, "K1", samples=100_000, seed=5, threads=1)
        b = curvature_mc(mu, "K1", samples=100_000, seed=5, threads=4)
        same = a.value == b.value and a.stderr == b.stderr
        ok &= hits >= 95 and same
        parts.append(f"{name} {hits}/100 within 3 stderr, threads bit-exact {same}")
    return ok, "; ".join(parts)


def criterion_7():
    start = time.perf_counter()
    mu = generate("four_corner_cantor", depth=3)
    grid = default_scale_grid(mu)
    base = verify_global_bound(mu, "K1", 2, grid=grid)
    worst = 0.0
    for s in (0.1, 3.0, 10.0):
        rep = verify_global_bound(mu.scaled(s, mass_scale=s), "K1", 2, grid=grid.scaled(s))
        worst = max(worst, _rel(rep.empirical_C, base.empirical_C))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 120 and base.lhs > 0 and base.rhs > 0
    return ok, f"{mu.size} atoms, ratio {base.empirical_C:.4g}, max rel change {worst:.1e}, {elapsed:.1f}s"


def criterion_8():
    seg = generate("segment", n_points=256)
    flat = curvature_exact(seg, "K1").value
    cantor = generate("four_corner_cantor", depth=4)
    est = curvature_mc(cantor, "K1", samples=1_000_000, seed=0)
    grid = ScaleGrid(0.02, 0.5, 8)
    ms = global_beta_integral(cantor, grid, 4, 2, 0.01, 2)
    ok = flat == 0.0 and est.value > 5 * est.stderr and ms > 0
    return ok, f"segment {flat}, cantor {est.value:.4g} +- {est.stderr:.2g}, global beta integral {ms:.3g}"


def criterion_9():
    parts = []
    ok = True
    for n, mu in ((1, generate("segment", n_points=80, random=True, seed=1)),
                  (2, generate("plane_patch", n=2, n_points=200, seed=0))):
        st = build_stopping_state(mu, StoppingParams(epsilon=0.01))
        masses = st.label_masses()
        g = build_graph(st)
        exact = bool(np.all(graph_distances(st.mu, g) <= 1e-12))
        cov = coverage_report(None, g, 1e-12).coverage
        all_z = bool(np.all(st.labels == "Z"))
        good = all_z and masses["F1"] == masses["F2"] == masses["F3"] == 0.0 and exact and cov == 1.0
        ok &= good
        parts.append(f"plane n={n}: all Z {all_z}, coverage {cov}")
    alpha = 0.25
    worst = 0.0
    for seed in range(3):
        mu = generate("lipschitz_graph", n_points=120, lipschitz=alpha / 2, seed=seed)
        g = build_graph(build_stopping_state(mu, StoppingParams(epsilon=0.01, alpha=alpha)))
        worst = max(worst, g.lipschitz_estimate(pairs=10_000, seed=seed))
    ok &= worst <= 3 * alpha
    parts.append(f"graph Lipschitz {worst:.3f} <= {3 * alpha}")
    return ok, "; ".join(parts)


def criterion_10():
    total = cubes_seen = 0
    for seed in range(3):
        mu = generate("lipschitz_graph", n_points=120, lipschitz=0.125, seed=seed)
        st = build_stopping_state(mu, StoppingParams(epsilon=0.01))
        cubes = whitney_decompose(st)
        rep = check_whitney(st, cubes)
        total += rep.bound_violations + rep.comparability_violations + rep.neighbour_count_violations
        cubes_seen += len(cubes)
    mu = generate("lipschitz_graph", n=2, n_points=150, lipschitz=0.125, seed=0)
    st = build_stopping_state(mu, StoppingParams(epsilon=0.01))
    cubes = whitney_decompose(st)
    rep = check_whitney(st, cubes, samples_per_cube=3)
    total += rep.bound_violations + rep.comparability_violations + rep.neighbour_count_violations
    ok = total == 0 and cubes_seen > 0 and len(cubes) > 0
    return ok, f"{cubes_seen} cubes (n=1), {len(cubes)} cubes (n=2), {total} violations"


def criterion_11():
    rep = lipschitz_ladder(n_points=40, seeds=range(20))
    for rec in rep["failures"]:
        print(f"  ladder failure: seed {rec['seed']} config {rep['config']} "
              f"curvature {rec['curvature']} beta {rec['beta_integral']}")
    frac = rep["monotone_fraction"]
    return frac >= 0.9, f"monotone fraction {frac:.2f} over 20 seeds, {len(rep['failures'])} failures"


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
}
SLOW = {6, 7, 8, 9, 10, 11}


def _report(num):
    ok, detail = CRITERIA[num]()
    line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}"
    return ok, line


@pytest.mark.parametrize("num", [pytest.param(k, marks=pytest.mark.slow) if k in SLOW else k for k in CRITERIA])
def test_criterion(num, capsys):
    ok, line = _report(num)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = []
    for num in CRITERIA:
        ok, line = _report(num)
        print(line, flush=True)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
