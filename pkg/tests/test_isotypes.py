from fractions import Fraction
from itertools import combinations, permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphpack.graph import Graph, complete_graph, path_graph
from graphpack.isotypes import SizeOutOfRange, canonicalize, census, sigma_bound

from conftest import connected_small_graphs


def marked_isomorphic(g, bg, h, bh) -> bool:
    if g.n_vertices != h.n_vertices or g.n_edges != h.n_edges or len(bg) != len(bh):
        return False
    for perm in permutations(range(g.n_vertices)):
        if {perm[b] for b in bg} != set(bh):
            continue
        if {tuple(sorted((perm[u], perm[v]))) for u, v in g.edges} == set(h.edges):
            return True
    return False


def all_marked_connected(k):
    pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
    out = []
    for r in range(len(pairs) + 1):
        for es in combinations(pairs, r):
            g = Graph.from_edges(k, es)
            if len(g.components()) != 1:
                continue
            for size in range(k + 1):
                for bnd in combinations(range(k), size):
                    out.append((g, set(bnd)))
    return out


def orbit_count(items):
    reps = []
    for g, b in items:
        if not any(marked_isomorphic(g, b, h, c) for h, c in reps):
            reps.append((g, b))
    return len(reps)


def test_k2_boundary_symmetry():
    e = Graph.from_edges(2, [(0, 1)])
    assert canonicalize(e, {0}) == canonicalize(e, {1})


def test_p3_end_vs_middle():
    p = path_graph(3)
    assert canonicalize(p, {0}) != canonicalize(p, {1})


@pytest.mark.parametrize("k", [2, 3])
def test_type_counts_match_brute_force(k):
    items = all_marked_connected(k)
    canon = {canonicalize(g, b) for g, b in items}
    assert len(canon) == orbit_count(items)


def test_three_vertex_count_is_ten():
    # P_3 has 6 boundary orbits and K_3 has 4
    assert len({canonicalize(g, b) for g, b in all_marked_connected(3)}) == 10


def test_two_vertex_count():
    assert len({canonicalize(g, b) for g, b in all_marked_connected(2)}) == 3 <= sigma_bound(2)


def test_sigma_bound():
    assert sigma_bound(2) == 16
    assert sigma_bound(3) == 512
    with pytest.raises(ValueError):
        sigma_bound(1)


def test_size_out_of_range():
    with pytest.raises(SizeOutOfRange):
        canonicalize(Graph(1, frozenset()), set())
    with pytest.raises(SizeOutOfRange):
        canonicalize(path_graph(4), set(), s=3)


@settings(max_examples=150, deadline=None)
@given(connected_small_graphs(2, 6), connected_small_graphs(2, 6), st.data())
def test_canonical_form_soundness(g, h, data):
    bg = set(data.draw(st.lists(st.integers(0, g.n_vertices - 1), unique=True)))
    bh = set(data.draw(st.lists(st.integers(0, h.n_vertices - 1), unique=True)))
    assert (canonicalize(g, bg) == canonicalize(h, bh)) == marked_isomorphic(g, bg, h, bh)


@settings(max_examples=100, deadline=None)
@given(connected_small_graphs(2, 8), st.data())
def test_relabel_invariance(g, data):
    bnd = set(data.draw(st.lists(st.integers(0, g.n_vertices - 1), unique=True)))
    perm = data.draw(st.permutations(range(g.n_vertices)))
    h = g.relabel(perm)
    assert canonicalize(h, {perm[b] for b in bnd}) == canonicalize(g, bnd)


def test_census_three_edges():
    e = Graph.from_edges(2, [(0, 1)])
    c = census([(e, set())] * 3)
    assert len(c.counts) == 1 and list(c.counts.values()) == [3]


def test_census_density_order():
    c = census([(path_graph(3), set()), (complete_graph(3), set())])
    assert [t.n_edges for t in c.ordering] == [3, 2]
    assert c.ordering[0].density == 1 and c.ordering[1].density == Fraction(2, 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_census_conservation(seed):
    from graphpack.instances import random_tree
    from graphpack.separation import separate

    g = random_tree(40, 3, np.random.default_rng(seed))
    sep = separate(g, 0.999, 5, enforce_budget=False)
    bnd = sep.boundary(g)
    pairs = []
    for comp in sep.components:
        sub, labels = g.induced_subgraph(comp)
        pairs.append((sub, [k for k, v in enumerate(labels) if v in bnd]))
    c = census(pairs, 5)
    rest = g.n_vertices - len(sep.separator)
    assert c.total_vertices == rest
    assert c.total_edges == sum(sub.n_edges for sub, _ in pairs)
    keys = [t.sort_key() for t in c.ordering]
    assert keys == sorted(keys)
