import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from whitener.coloring import (coloring_clusters, colorable_random_graph, energy, enumerate_legal_colorings,
                               find_legal_coloring, is_legal, planted_instance, random_coloring,
                               random_local_recoloring, recolorings_within, walkcol)
from whitener.errors import InvalidArgumentError, InvalidParameterError, ResourceLimitError
from whitener.graph import Graph, complete_graph, generate_random_graph, path_graph, random_tree, ring_graph


def test_legality_examples(triangle, single_edge):
    assert is_legal(triangle, [1, 2, 3])
    assert not is_legal(triangle, [1, 2, 1])
    assert energy(triangle, [1, 1, 1]) == 3
    assert energy(single_edge, [2, 2]) == 1
    with pytest.raises(InvalidArgumentError):
        is_legal(triangle, [1, 2])


@given(st.integers(1, 15), st.integers(0, 30), st.integers(2, 4), st.integers(0, 10**6))
def test_energy_zero_iff_legal(n, m, q, seed):
    m = min(m, n * (n - 1) // 2)
    g = generate_random_graph(n, m, seed)
    c = random_coloring(n, q, np.random.default_rng(seed))
    assert (energy(g, c) == 0) == is_legal(g, c)


def test_enumeration_small_cases(triangle, k4):
    assert enumerate_legal_colorings(triangle, 3).count == 6
    assert enumerate_legal_colorings(k4, 3).count == 0
    assert enumerate_legal_colorings(ring_graph(5), 2).count == 0
    # chromatic polynomial of a tree: q (q-1)^(n-1)
    t = random_tree(9, 4)
    assert enumerate_legal_colorings(t, 3).count == 3 * 2 ** 8
    # odd ring: (q-1)^n - (q-1)
    assert enumerate_legal_colorings(ring_graph(7), 3).count == 2 ** 7 - 2
    est = enumerate_legal_colorings(Graph.from_edges(2, []), 3, cap=10)
    assert est.count == 9 and est.colorings.shape == (9, 2)
    assert math.isclose(est.s, math.log(9) / 2)


def test_enumeration_lists_legal_distinct_colorings():
    g = generate_random_graph(9, 13, 2)
    est = enumerate_legal_colorings(g, 3, cap=10**5)
    rows = {r.tobytes() for r in est.colorings}
    assert len(rows) == est.count
    assert all(is_legal(g, r) for r in est.colorings)


@pytest.mark.parametrize("seed", range(8))
def test_enumeration_count_divisible_by_color_permutations(seed):
    g = generate_random_graph(10, 14, seed)
    est = enumerate_legal_colorings(g, 3)
    assert est.count % math.factorial(3) == 0


def test_enumeration_budget():
    with pytest.raises(ResourceLimitError):
        enumerate_legal_colorings(generate_random_graph(30, 30, 1), 3, budget=100)
    with pytest.raises(InvalidParameterError):
        enumerate_legal_colorings(complete_graph(3), 1)


def test_walkcol_examples(triangle):
    res = walkcol(triangle, 3, seed=1)
    assert res.legal and is_legal(triangle, res.coloring)
    stuck = walkcol(complete_graph(4), 3, seed=1, max_steps=500)
    assert not stuck.legal and stuck.steps == 500 and stuck.energy >= 1
    empty = walkcol(Graph.from_edges(4, []), 2, seed=3)
    assert empty.steps == 0 and empty.legal


def test_find_legal_coloring_outputs_are_legal():
    rng = np.random.default_rng(7)
    found = 0
    for _ in range(1000):
        n = int(rng.integers(5, 201))
        alpha = float(rng.uniform(0.2, 2.0))
        g = generate_random_graph(n, min(int(alpha * n), n * (n - 1) // 2), int(rng.integers(2**31)))
        c = find_legal_coloring(g, 3, int(rng.integers(2**31)), max_steps=20_000)
        if c is not None:
            found += 1
            assert is_legal(g, c)
    assert found > 900


def test_planted_and_colorable_instances():
    g, hidden = planted_instance(300, 690, 3, 4)
    assert g.m == 690 and is_legal(g, hidden)
    pair = colorable_random_graph(200, 300, 3, seed=1)
    assert pair is not None and is_legal(*pair)


def test_recolorings_within_region():
    g = path_graph(5)
    c = np.array([1, 2, 1, 2, 1])
    found = recolorings_within(g, c, 3, [2])
    # node 2 sees colors {2} from both sides -> may take 1 or 3
    assert sorted(int(r[2]) for r in found) == [1, 3]
    assert all(np.array_equal(np.delete(r, 2), np.delete(c, 2)) for r in found)


def test_random_local_recoloring_stays_inside(rng):
    g, c = planted_instance(400, 800, 3, 9)
    region = [0, 1, 2, 3, 4, 5]
    other = random_local_recoloring(g, c, 3, region, rng)
    assert other is not None and is_legal(g, other)
    outside = np.setdiff1d(np.arange(g.n), region)
    assert np.array_equal(other[outside], c[outside])
    assert not np.array_equal(other, c)
    # a node pinned by both other colors cannot change
    star = Graph.from_edges(3, [(0, 1), (0, 2)])
    assert random_local_recoloring(star, np.array([3, 1, 2]), 3, [0], rng) is None


def test_clusters_of_small_graphs(triangle):
    cols = enumerate_legal_colorings(triangle, 3, cap=100).colorings
    # every proper 3-coloring of a triangle is frozen
    assert coloring_clusters(triangle, cols, 3) == 6
    p = path_graph(2)
    cols = enumerate_legal_colorings(p, 3, cap=100).colorings
    assert coloring_clusters(p, cols, 3) == 1
    assert coloring_clusters(p, np.zeros((0, 2), dtype=int), 3) == 0
