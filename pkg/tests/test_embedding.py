from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphpack.embedding import NoCandidate, embed_separators, forbidden_sets, make_partition, usage_cap
from graphpack.graph import Graph, path_graph, star_graph
from graphpack.instances import random_tree
from graphpack.separation import separate


def test_empty_separators_leave_maps():
    g = path_graph(2)
    h = {0: {0: 0, 1: 1}}
    part = make_partition(2, 2)
    out, stats = embed_separators([g], [[]], h, part)
    assert out == h and stats.steps == 0 and part.edges.count_used() == 0


def test_star_centre_goes_to_least_used():
    g = star_graph(2)  # centre 0, leaves 1 and 2
    part = make_partition(2, 3)
    part.usage[:] = [1, 0, 0]
    out, stats = embed_separators([g], [[0]], {0: {1: 0, 2: 1}}, part)
    assert out[0][0] == 3
    assert part.edges.owner[part.edges.index(0, 3)] == 0
    assert part.edges.owner[part.edges.index(1, 3)] == 0
    assert stats.crossing_edges == 2 and part.edges.count_used() == 2


def test_shared_boundary_host_forces_distinct_images():
    g = star_graph(2)
    part = make_partition(3, 3)
    h = {0: {1: 0, 2: 1}, 1: {1: 0, 2: 2}}
    out, _ = embed_separators([g, g], [[0], [0]], h, part, keep_trace=True)
    assert out[0][0] != out[1][0]
    # the first image is in the crossing set of the second graph's centre
    part2 = make_partition(3, 3)
    out2, _ = embed_separators([g], [[0]], {0: h[0]}, part2)
    cs = forbidden_sets(0, g, dict(h[1]), {0}, part2)
    assert out2[0][0] in cs.crossing


def test_first_vertex_no_restrictions():
    g = star_graph(2)
    part = make_partition(2, 4)
    cs = forbidden_sets(0, g, {1: 0, 2: 1}, {0}, part)
    assert cs.sizes() == {"P1": 0, "P2": 0, "P3": 0, "cap": 0}
    assert cs.candidates == list(range(2, 6))


def test_sibling_in_p1():
    g = path_graph(3)  # separator {0, 2}, component {1}
    part = make_partition(1, 4)
    out, _ = embed_separators([g], [[0]], {0: {1: 0}}, part)
    cs = forbidden_sets(2, g, out[0], {0, 2}, part)
    assert out[0][0] in cs.injective


def test_crossing_bound_with_shared_x():
    # k earlier graphs each have a boundary preimage on x = 0
    k, Delta = 4, 3
    g = star_graph(Delta)
    part = make_partition(8, 10)
    graphs, seps, h = [], [], {}
    for i in range(k):
        graphs.append(g)
        seps.append([0])
        h[i] = {1: 0, 2: 1 + i, 3: 5}
    embed_separators(graphs, seps, h, part)
    cs = forbidden_sets(0, g, {1: 0, 2: 6, 3: 7}, {0}, part)
    assert len(cs.crossing) <= k * Delta
    assert len(cs.crossing) == k


def test_no_candidate_reports_dominant():
    g = star_graph(2)
    part = make_partition(2, 1)
    with pytest.raises(NoCandidate) as exc:
        embed_separators([g, g], [[0], [0]], {0: {1: 0, 2: 1}, 1: {1: 0, 2: 1}}, part)
    assert exc.value.dominant == "P2"


def test_usage_cap_value():
    assert usage_cap(Fraction(1, 288), 600, 590) == Fraction(3 * 600 * 600, 288 * 590)
    with pytest.raises(ValueError):
        make_partition(3, 0)


def _random_instance(seed, n_x=30, n_y=30, graphs=8):
    rng = np.random.default_rng(seed)
    gs, seps, h = [], [], {}
    for i in range(graphs):
        g = random_tree(int(rng.integers(3, 20)), 3, rng)
        sep = sorted(separate(g, 0.999, 3, enforce_budget=False).separator)
        rest = [v for v in range(g.n_vertices) if v not in sep]
        xs = rng.permutation(n_x)[: len(rest)]
        gs.append(g)
        seps.append(sep)
        h[i] = {v: int(x) for v, x in zip(rest, xs)}
    return gs, seps, h


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_embedding_invariants(seed):
    gs, seps, h = _random_instance(seed)
    part = make_partition(30, 30)
    try:
        out, stats = embed_separators(gs, seps, h, part)
    except NoCandidate:
        return
    cross = sum(1 for g, sep in zip(gs, seps) for u in sep for w in g.neighbors(u) if w not in sep)
    inside = sum(1 for g, sep in zip(gs, seps) for a, b in g.edges if a in sep and b in sep)
    assert stats.crossing_edges == cross and stats.inside_edges == inside
    assert part.edges.count_used() == cross + inside
    assert int(part.usage.sum()) == sum(len(s) for s in seps)
    for i, g in enumerate(gs):
        mp = out[i]
        assert len(set(mp.values())) == len(mp) == g.n_vertices
        assert all(mp[u] >= 30 for u in seps[i])


def test_deterministic_choice():
    gs, seps, h = _random_instance(5)
    a, _ = embed_separators(gs, seps, h, make_partition(30, 30))
    b, _ = embed_separators(gs, seps, h, make_partition(30, 30))
    assert a == b
