import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphpack.assignment import (
    AssignmentState,
    OutOfFactors,
    TypeTooLarge,
    assign_component_graph,
    chunk_capacity,
    closed_form_chunk_count,
    waste_inequality,
    plan_chunks,
    waste_report,
)
from graphpack.designs import LayeredDesign
from graphpack.graph import EdgeTable, Graph, complete_graph
from graphpack.instances import random_tree
from graphpack.isotypes import census
from graphpack.separation import separate

from conftest import component_census, min_chunks_dp


def matching_graph(k):
    return Graph.from_edges(2 * k, [(2 * a, 2 * a + 1) for a in range(k)])


def k2_census(nu):
    return census([(complete_graph(2), [])] * nu)


def test_chunks_k2_m10():
    cp = plan_chunks(k2_census(7), 10, 0)
    (t,) = cp.chunks
    assert cp.capacity[t] == 5 and cp.mu[t] == 2
    assert [len(c) for c in cp.chunks[t]] == [5, 2]
    assert cp.mu[t] == closed_form_chunk_count(7, 2, 10, 0)


def test_chunks_empty():
    cp = plan_chunks(census([]), 10, 0)
    assert cp.total_chunks() == 0 and cp.chunks == {}


def test_chunks_k3_m12():
    cp = plan_chunks(census([(complete_graph(3), [])] * 5), 12, Fraction(1, 4))
    (t,) = cp.chunks
    assert cp.capacity[t] == 3 and cp.mu[t] == 2
    assert [len(c) for c in cp.chunks[t]] == [3, 2]
    assert cp.mu[t] == min_chunks_dp(5, 3, 12, Fraction(1, 4))


def test_type_too_large():
    with pytest.raises(TypeTooLarge):
        plan_chunks(census([(complete_graph(3), [])]), 2, 0)


def test_non_integral_capacity_uses_true_minimum():
    # capacity 10/3 floors to 3, so 10 triangles need 4 chunks
    assert chunk_capacity(3, 10, 0) == 3
    assert closed_form_chunk_count(10, 3, 10, 0) == 3
    cp = plan_chunks(census([(complete_graph(3), [])] * 10), 10, 0)
    assert cp.total_chunks() == 4 == min_chunks_dp(10, 3, 10, 0)


@settings(max_examples=200)
@given(st.integers(0, 50), st.integers(2, 6), st.integers(2, 60), st.sampled_from([0, Fraction(1, 8), Fraction(1, 4)]))
def test_chunk_plan_matches_enumerator(nu, v, m, eta):
    if chunk_capacity(v, m, eta) < 1:
        return
    from graphpack.graph import path_graph

    cp = plan_chunks(census([(path_graph(v), [])] * nu), m, eta)
    total = cp.total_chunks()
    assert total == min_chunks_dp(nu, v, m, eta)
    members = sorted(x for cs in cp.chunks.values() for c in cs for x in c)
    assert members == list(range(nu))
    for cs in cp.chunks.values():
        assert all(len(c) == cp.capacity[t] for t in cp.chunks for c in cp.chunks[t][:-1])


def _state(N, m, l, eta=0):
    ld = LayeredDesign(N, m, l, eta, seed=0)
    return AssignmentState(ld)


def _assign(st, i, g, separator=(), s=4):
    cen, comps = component_census(g, separator, s)
    cp = plan_chunks(cen, st.layered.m, st.layered.eta_target)
    return assign_component_graph(st, i, cen, cp, comps), cp


def _check_graph_map(g, fmap, owner_edges):
    assert len(set(fmap.values())) == len(fmap)
    for u, v in g.edges:
        if u in fmap and v in fmap:
            e = (min(fmap[u], fmap[v]), max(fmap[u], fmap[v]))
            assert e not in owner_edges
            owner_edges.add(e)


def test_three_edges_two_chunks():
    st = _state(16, 4, 4)
    g = matching_graph(3)
    fmap, cp = _assign(st, 0, g)
    (t,) = cp.chunks
    assert cp.capacity[t] == 2 and cp.mu[t] == 2
    kms = {p.km for p in st.placements}
    assert len(kms) == 2 and {j for j, _ in kms} == {0}
    _check_graph_map(g, fmap, set())
    for p in st.placements:
        assert set(p.hosts) <= set(st.layered.block(*p.km))


def test_empty_graph():
    st = _state(16, 4, 4)
    assert assign_component_graph(st, 0, census([]), plan_chunks(census([]), 4, 0)) == {}
    assert st.cursor == 0 and st.placements == [] and st.edges.count_used() == 0


def test_wrap_around_reuses_touched_kms():
    st = _state(16, 4, 4)
    owner = set()
    g = matching_graph(6)
    f0, _ = _assign(st, 0, g)
    f1, _ = _assign(st, 1, g)
    _check_graph_map(g, f0, owner)
    _check_graph_map(g, f1, owner)
    assert st.graph_factor == {0: 0, 1: 0}
    first = {p.km for p in st.placements if p.graph == 0}
    second = {p.km for p in st.placements if p.graph == 1}
    assert first & second
    assert st.edges.count_used() == 12


def test_out_of_factors():
    st = _state(4, 2, 2)
    g = matching_graph(2)
    for i in range(3):
        _assign(st, i, g)
    with pytest.raises(OutOfFactors):
        _assign(st, 3, g)


def test_perfect_instance_has_no_waste():
    st = _state(4, 2, 2)
    for i in range(3):
        _assign(st, i, matching_graph(2))
    w = waste_report(st)
    assert (w.v1, w.v2, w.e0, w.e1, w.e2) == (0, 0, 0, 0, 0)
    assert w.used_edges == 6 == w.total_edges


def test_single_tiny_graph_waste():
    st = _state(16, 4, 4)
    _assign(st, 0, complete_graph(2))
    w = waste_report(st)
    placed = {h for p in st.placements for h in p.hosts}
    consumed_hosts = set()
    for km, f, k, t, _u, _n in st.consumed:
        consumed_hosts |= {h for pl in st.layered.matching(km[0], km[1], f, k, t) for h in pl}
    assert w.v1 == len(consumed_hosts - placed) == 2
    assert w.v1 <= 1 * st.layered.m
    assert w.unused_edges == math.comb(16, 2) - 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_random_tree_assignment_invariants(seed):
    rng = np.random.default_rng(seed)
    st = _state(64, 8, 8, Fraction(1, 4))
    owner = set()
    delta = 3
    for i in range(6):
        g = random_tree(int(rng.integers(4, 16)), delta, rng)
        sep = separate(g, 0.999, 4, enforce_budget=False)
        fmap, _ = _assign(st, i, g, sep.separator, 4)
        _check_graph_map(g, fmap, owner)
        assert st.spread() <= st.layered.m * delta / 2 or st.cursor != st.graph_factor[i]
        for km, kst in st.layered.states.items():
            placed = sum(p.s_type.n_edges for p in st.placements if p.km == km)
            assert kst.used_edges == placed
    w = waste_report(st)
    assert w.unused_edges == math.comb(64, 2) - st.edges.count_used()
    assert st.used_factors == sorted(st.used_factors)


def test_checkpoint_json(tmp_path):
    st = _state(16, 4, 4)
    _assign(st, 0, matching_graph(3))
    path = tmp_path / "ck.json"
    st.dump_checkpoint(path)
    import json

    obj = json.loads(path.read_text())
    assert obj["N"] == 16 and obj["maps"][0]["graph"] == 0


def test_waste_inequality():
    assert waste_inequality(1, 2, 100, Fraction(1, 10), 2)
    assert not waste_inequality(3, 4, 8, Fraction(1, 10), 3)
