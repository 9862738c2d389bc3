import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import frozen
import oracles
from mengerlab import IntegrandKind, check_propriety, evaluate, symmetrize
from mengerlab.errors import BadParams, TooLargeN
from mengerlab.integrands import is_degenerate

seeds = st.integers(0, 2**32 - 1)


def reference_value(tag, n, tup):
    """Direct formulas with volumes from Cayley-Menger determinants."""
    X = np.asarray(tup, dtype=float)
    H = oracles.cayley_menger_volume(X)
    d = {(i, j): float(np.linalg.norm(X[i] - X[j])) for i in range(n + 2) for j in range(n + 2)}
    diam = max(d.values())
    if tag == "K1":
        return H / math.prod(d[i, j] for i, j in itertools.combinations(range(n + 2), 2))
    if tag == "K2":
        vol = H * math.factorial(n + 1)
        s = sum(1.0 / math.prod(d[i, j] ** 2 for j in range(n + 2) if j != i) for i in range(n + 2))
        return math.sqrt(vol**2 / diam ** (n * (n + 1)) * s / (n + 2))
    if tag == "K3":
        return H / diam ** ((n + 1) * (n + 2) // 2)
    if tag == "K4":
        area = sum(oracles.cayley_menger_volume(np.delete(X, i, axis=0)) for i in range(n + 2))
        return H / (area * diam**2)
    if tag == "K5":
        return H / diam ** (n + 2)
    h = oracles.flat_distance(X[n + 1], X[: n + 1])
    return h / math.prod(d[n + 1, i] for i in range(n + 1))


def test_kind_defaults_and_validation():
    assert IntegrandKind("k1").p == 2.0
    assert IntegrandKind("K4", n=2).p == 6.0
    assert IntegrandKind("K6", n=2).p == 3.0
    with pytest.raises(BadParams):
        IntegrandKind("K7")
    with pytest.raises(BadParams):
        IntegrandKind("K1", p=1.0)


def test_k1_equilateral(equilateral):
    assert evaluate(IntegrandKind("K1"), equilateral) == pytest.approx(frozen.K1_EQUILATERAL, rel=1e-12)


def test_k5_regular_tetrahedron(regular_tetrahedron):
    assert evaluate(IntegrandKind("K5", 2), regular_tetrahedron) == pytest.approx(frozen.K5_REGULAR_TETRAHEDRON, rel=1e-12)


@pytest.mark.parametrize("tag", ["K1", "K2", "K3", "K4", "K5", "K6"])
def test_degenerate_tuples_vanish(tag):
    k = IntegrandKind(tag)
    assert evaluate(k, [[0, 0], [1, 1], [2, 2]]) == 0.0
    assert evaluate(k, [[0, 0], [0, 0], [1, 3]]) == 0.0


def test_degeneracy_predicate():
    assert is_degenerate([[0, 0], [0, 0], [1, 1]])
    assert is_degenerate([[0, 0], [1, 0], [3, 0]])
    assert not is_degenerate([[0, 0], [1, 0], [0, 1]])


@pytest.mark.parametrize("tag", ["K1", "K2", "K3", "K4", "K5", "K6"])
@pytest.mark.parametrize("n", [1, 2])
def test_kinds_match_direct_formulas(tag, n):
    rng = np.random.default_rng(17 * n + ord(tag[1]))
    kind = IntegrandKind(tag, n)
    for _ in range(25):
        tup = rng.normal(size=(n + 2, n + 1 + int(rng.integers(0, 2))))
        assert evaluate(kind, tup) == pytest.approx(reference_value(tag, n, tup), rel=1e-7)


@given(seeds)
def test_k1_is_quarter_menger_curvature(seed):
    rng = np.random.default_rng(seed)
    tup = rng.normal(size=(3, int(rng.integers(2, 4))))
    c = oracles.menger_curvature(*tup)
    assert abs(evaluate(IntegrandKind("K1"), tup) - c / 4) <= 1e-10 * c


@given(seeds, st.sampled_from(["K1", "K2", "K3", "K4", "K5", "K6"]))
def test_translation_invariance(seed, tag):
    rng = np.random.default_rng(seed)
    k = IntegrandKind(tag, int(rng.integers(1, 3)))
    tup = rng.normal(size=(k.n + 2, k.n + 1))
    b = rng.normal(scale=10, size=k.n + 1)
    v = evaluate(k, tup)
    assert abs(evaluate(k, tup + b) - v) <= 1e-10 * v + 1e-300
    assert v >= 0


def test_symmetrized_k1_equals_original():
    rng = np.random.default_rng(1)
    tup = rng.normal(size=(3, 2))
    assert symmetrize(IntegrandKind("K1")).evaluate(tup) == pytest.approx(evaluate(IntegrandKind("K1"), tup), rel=1e-12)


def test_symmetrized_k6_is_six_term_average():
    rng = np.random.default_rng(2)
    tup = rng.normal(size=(3, 2))
    k = IntegrandKind("K6")
    ref = np.mean([evaluate(k, tup[list(s)]) ** k.p for s in itertools.permutations(range(3))]) ** (1 / k.p)
    assert symmetrize(k).evaluate(tup) == pytest.approx(ref, rel=1e-12)
    assert symmetrize(k).evaluate([[0, 0], [1, 1], [2, 2]]) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_symmetrized_is_permutation_invariant(n):
    rng = np.random.default_rng(n)
    tup = rng.normal(size=(n + 2, n + 1))
    s = symmetrize(IntegrandKind("K6", n))
    base = s.evaluate(tup)
    vals = [s.evaluate(tup[list(p)]) for p in itertools.permutations(range(n + 2))]
    assert np.allclose(vals, base, rtol=1e-12)


def test_symmetrize_rejects_large_n():
    with pytest.raises(TooLargeN):
        symmetrize(IntegrandKind("K1", 7))


@pytest.mark.parametrize("tag, n", [("K1", 1), ("K5", 1), ("K5", 2), ("K6", 1)])
def test_propriety_report_proper_kinds(tag, n):
    r = check_propriety(IntegrandKind(tag, n), sample_count=300, seed=1)
    assert r.scaling_violation <= 1e-9 and r.translation_violation <= 1e-9
    assert r.is_proper
    assert all(np.isfinite(v) and v > 0 for v in r.simplex_ratios.values())
    assert set(r.to_dict()) >= {"scaling_violation", "fitted_c", "fitted_l", "is_proper"}


def test_propriety_report_flags_wrong_exponent():
    r = check_propriety("K1", p=3.0, sample_count=300, seed=1)
    assert r.scaling_violation > 1e-3
    assert not r.is_proper
