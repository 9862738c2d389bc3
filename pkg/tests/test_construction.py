import math

import numpy as np
import pytest

import frozen
import oracles
from mengerlab import AffineSubspace, DiscreteMeasure, angle, generate
from mengerlab.construction import (
    build_graph,
    check_whitney,
    coverage_report,
    gamma,
    gamma_tilde,
    graph_distances,
    select_ball,
    whitney_decompose,
)
from mengerlab.construction.gamma import ball_grid
from mengerlab.construction.graph import cube_bump
from mengerlab.construction.stopping import StoppingParams, build_stopping_state, default_grid, normalize_measure
from mengerlab.errors import BadParams, EmptyMeasure, NoGoodBall, OutOfDomain, ProjectionNotInjective

ALPHA = 0.25


@pytest.fixture(scope="module")
def graph_state():
    mu = generate("lipschitz_graph", n_points=120, lipschitz=ALPHA / 2, seed=0)
    return build_stopping_state(mu, StoppingParams(epsilon=0.01, alpha=ALPHA))


@pytest.fixture(scope="module")
def graph_cubes(graph_state):
    return whitney_decompose(graph_state)


@pytest.fixture(scope="module")
def graph(graph_state, graph_cubes):
    return build_graph(graph_state, graph_cubes)


@pytest.fixture(scope="module")
def plane_state():
    return build_stopping_state(generate("segment", n_points=80, random=True, seed=1), StoppingParams(epsilon=0.01))


# ---------------------------------------------------------------------------
# stopping state


def test_params_validation():
    with pytest.raises(BadParams):
        StoppingParams(epsilon=0.1, alpha=0.3)
    with pytest.raises(BadParams):
        StoppingParams(epsilon=0.1, k=2.0)
    with pytest.raises(BadParams):
        StoppingParams(epsilon=-1.0)


def test_normalization_fits_support():
    mu = generate("sphere", n_points=50, seed=2).scaled(7.0, mass_scale=3.0).translated([4, -2])
    nu, tr = normalize_measure(mu)
    assert np.max(np.linalg.norm(nu.points, axis=1)) == pytest.approx(4.5)
    assert nu.total_mass == pytest.approx(1.0)
    assert np.allclose(tr.inverse(nu.points), mu.points)


def test_default_grid_is_closed_under_factor_four():
    g = default_grid(1e-3)
    assert g.max() == 49.0 and g.min() >= 4e-3
    inner = g[g >= 4 * g.min()]
    assert all(np.any(np.isclose(g, t / 4)) for t in inner)


def test_plane_samples_are_all_z(plane_state):
    st = plane_state
    assert np.all(st.h == 0) and np.all(st.labels == "Z")
    assert np.all(st.member)
    m = st.label_masses()
    assert m["F1"] == m["F2"] == m["F3"] == 0.0
    assert whitney_decompose(st) == []


def test_empty_stopping_set_without_flatness():
    st = build_stopping_state(generate("segment", n_points=30), StoppingParams(epsilon=0.0))
    assert not np.any(st.member) and np.all(st.h > 0)
    assert np.all(np.isinf(st.s_min))
    cubes = whitney_decompose(st)
    with pytest.raises(NoGoodBall):
        select_ball(st, cubes[0])


def test_empty_measure_rejected():
    with pytest.raises(EmptyMeasure):
        build_stopping_state(None, StoppingParams(epsilon=0.1))


def test_membership_is_upward_closed(graph_state):
    for row in graph_state.in_S:
        assert np.all(np.diff(row.astype(int)) >= 0)


def test_d_below_h_and_s_min_consistent(graph_state):
    st = graph_state
    assert np.all(st.d <= st.h + 1e-12)
    fin = np.isfinite(st.s_min)
    assert np.all(st.s_min[fin] >= st.h[fin] * (1 - 1e-12))
    assert np.all(st.s_min[st.is_Z] == 0)


def test_d_and_D_are_one_lipschitz(graph_state):
    st = graph_state
    X = st.mu.points
    dd = np.abs(st.d[:, None] - st.d[None])
    dx = np.linalg.norm(X[:, None] - X[None], axis=-1)
    assert np.all(dd <= dx + 1e-12)
    rng = np.random.default_rng(0)
    U = rng.uniform(-5, 5, size=(300, 1))
    D = st.D(U)
    assert np.all(np.abs(D[:, None] - D[None]) <= np.abs(U - U.T) + 1e-12)


def test_D_matches_brute_force(graph_state):
    st = graph_state
    rng = np.random.default_rng(1)
    pairs = [(st.u[i], t) for i in range(st.mu.size) for j, t in enumerate(st.scales) if st.in_S[i, j]]
    pairs += [(st.u[i], 0.0) for i in np.flatnonzero(st.is_Z)]
    for y in rng.uniform(-6, 6, size=(40, 1)):
        ref = min(float(np.linalg.norm(u - y)) + t for u, t in pairs)
        assert st.D(y)[0] == pytest.approx(ref, rel=1e-12)


def test_graph_data_has_no_tilted_points(graph_state):
    assert graph_state.label_masses()["F3"] == 0.0


def test_state_serialises(graph_state):
    d = graph_state.to_dict()
    assert len(d["points"]) == 120 and set(d["summary"]["label_counts"]) == {"Z", "F1", "F2", "F3", "U"}


# ---------------------------------------------------------------------------
# Whitney cubes and balls


def test_whitney_invariants(graph_state, graph_cubes):
    assert graph_cubes
    rep = check_whitney(graph_state, graph_cubes)
    assert rep.ok, rep
    assert rep.max_neighbours <= 180


def test_cubes_are_interior_disjoint(graph_cubes):
    lo = np.array([q.lo for q in graph_cubes])
    hi = np.array([q.hi for q in graph_cubes])
    for i in range(len(graph_cubes)):
        overlap = np.minimum(hi[i], hi[i + 1 :]) - np.maximum(lo[i], lo[i + 1 :])
        assert not np.any(np.all(overlap > 1e-12, axis=1))


def test_cubes_avoid_projected_z(graph_state, graph_cubes):
    z = graph_state.u[graph_state.is_Z]
    for q in graph_cubes:
        assert not np.any(np.all((z > q.lo) & (z < q.hi), axis=1))


def test_selected_balls_satisfy_bounds(graph_state, graph_cubes):
    st = graph_state
    for q in graph_cubes:
        sb = select_ball(st, q)
        r = sb.ball.radius
        assert q.diam <= 2 * r * (1 + 1e-12) and 2 * r <= 200 * q.diam * (1 + 1e-12)
        gap = np.maximum(np.maximum(q.lo - st.u[sb.point_index], st.u[sb.point_index] - q.hi), 0)
        assert max(0.0, float(np.linalg.norm(gap)) - r) <= 100 * q.diam
        assert r == max(sb.t, q.diam / 2)
        assert angle(sb.plane, st.P0) <= ALPHA + 1e-12


def test_inflation_path(graph_state, graph_cubes):
    inflated = [select_ball(graph_state, q) for q in graph_cubes]
    for sb, q in zip(inflated, graph_cubes):
        if sb.inflated:
            assert sb.ball.radius == q.diam / 2 > sb.t


# ---------------------------------------------------------------------------
# graph function


def test_bump_is_one_on_2R_and_zero_off_3R(graph_cubes):
    q = graph_cubes[len(graph_cubes) // 2]
    rng = np.random.default_rng(0)
    inner = q.center + rng.uniform(-1, 1, size=(50, 1)) * q.side
    outer = q.center + np.sign(rng.uniform(-1, 1, size=(50, 1))) * rng.uniform(1.5, 3, size=(50, 1)) * q.side
    assert np.all(cube_bump(q, inner) == 1.0)
    assert np.all(cube_bump(q, outer) == 0.0)


def test_partition_of_unity(graph):
    U = graph.sample_domain(2000, seed=3)
    U = U[graph.in_cubes(U)]
    assert U.shape[0] > 100
    assert graph.partition_error(U) <= 1e-9


def test_local_maps_are_two_alpha_lipschitz(graph):
    assert max(m.lipschitz for m in graph.maps) <= 2 * ALPHA


def test_graph_is_exact_on_z(graph_state, graph):
    z = np.flatnonzero(graph_state.is_Z)
    vals = graph(graph_state.u[z])
    ref = graph_state.mu.points[z] @ graph_state.P0.normal_basis().T
    assert np.array_equal(vals, ref)
    assert graph.z_lipschitz() <= 2 * ALPHA
    assert graph.z_lipschitz() == pytest.approx(oracles.max_pairwise_slope(graph_state.u[z], ref), rel=1e-12)


def test_graph_lipschitz_constant(graph):
    assert graph.lipschitz_estimate(pairs=10_000, seed=0) <= 3 * ALPHA


def test_out_of_domain(graph):
    with pytest.raises(OutOfDomain):
        graph(np.array([11.9]))
    assert not graph.in_domain(np.array([[20.0]]))[0]


def test_plane_graph_reproduces_points(plane_state):
    g = build_graph(plane_state)
    dist = graph_distances(plane_state.mu, g)
    assert np.all(dist <= 1e-12)
    rep = coverage_report(None, g, 1e-12)
    assert rep.coverage == 1.0
    assert rep.label_masses["F1"] + rep.label_masses["F2"] + rep.label_masses["F3"] == 0.0
    assert coverage_report(None, g, math.inf).coverage == 1.0


def test_stacked_z_points_rejected():
    x = np.linspace(0, 1, 40)
    pts = np.vstack([np.column_stack([x, np.zeros(40)]), [[x[20], 1e-7]]])
    st = build_stopping_state(DiscreteMeasure(pts), StoppingParams(epsilon=0.1, P0=AffineSubspace.coordinate(2, [0])))
    assert np.all(st.is_Z)
    with pytest.raises(ProjectionNotInjective):
        build_graph(st)


def test_coverage_report_fields(graph):
    d = coverage_report(None, graph, 1e-3).to_dict()
    assert set(d) == {"tol", "coverage", "defined_mass", "label_masses", "G_mass", "F_tilde_mass", "undefined_mass"}
    assert 0.0 <= d["coverage"] <= 1.0
    assert sum(d["label_masses"].values()) == pytest.approx(1.0)


def test_export_grid_rows_are_unique(graph):
    rows = graph.export_grid(100)
    assert rows.shape[1] == 2
    assert np.unique(rows[:, 0]).size == rows.shape[0]


# ---------------------------------------------------------------------------
# gamma


def test_gamma_of_affine_map_is_zero():
    assert gamma(lambda U: 0.3 * U[:, 0] + 0.1, np.zeros(1), 1.0) < 1e-9
    assert gamma(lambda U: U @ np.array([0.2, -0.1]) - 1.0, np.zeros(2), 0.5, resolution=32) < 1e-9


def test_gamma_of_absolute_value_matches_sweep():
    c = frozen.GAMMA_ABS_C
    ref = oracles.sweep_gamma_1d(lambda u: c * np.abs(u))
    assert gamma(lambda U: c * np.abs(U[:, 0]), np.zeros(1), 1.0, resolution=256) == pytest.approx(ref, rel=0.02)


def test_ball_grid_volume():
    U, dv = ball_grid(np.zeros(2), 1.0, 200)
    assert U.shape[0] * dv == pytest.approx(math.pi, rel=1e-2)


def test_gamma_against_plane_version(graph):
    # centre balls inside big cubes so that they stay in the domain
    big = sorted(graph.cubes, key=lambda q: -q.side)[:5]
    for q in big:
        t = 0.45 * q.side
        a = gamma(graph, q.center, t, resolution=64)
        b = gamma_tilde(graph, q.center, t, resolution=64)
        assert a <= 3 * b + 1e-12


def test_gamma_out_of_domain(graph):
    with pytest.raises(OutOfDomain):
        gamma(graph, np.array([11.5]), 1.0)
