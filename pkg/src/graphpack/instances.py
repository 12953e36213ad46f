"""Seeded generators of graph sequences for experiments and tests."""

from __future__ import annotations

from math import comb

import numpy as np

from .graph import Graph, GraphSequence, validate_sequence

KINDS = ("random-trees", "random-outerplanar", "caterpillars", "gyarfas-exact")


class GenerationFailed(ValueError):
    pass


def random_tree(k: int, delta_max: int, rng) -> Graph:
    """Random tree on ``k`` vertices: each new vertex attaches to a uniform
    existing vertex whose degree is still below ``delta_max``."""
    if k == 1:
        return Graph(1, frozenset())
    if delta_max < 1 or (delta_max < 2 and k > 2):
        raise GenerationFailed(f"no tree on {k} vertices has max degree <= {delta_max}")
    deg = [0] * k
    edges = []
    for v in range(1, k):
        open_ = [u for u in range(v) if deg[u] < delta_max]
        u = open_[int(rng.integers(len(open_)))]
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
    perm = [int(x) for x in rng.permutation(k)]
    return Graph.from_edges(k, edges).relabel(perm)


def caterpillar(k: int, delta_max: int, rng) -> Graph:
    """Spine path plus pendant legs, degree at most ``delta_max``."""
    if k <= 2:
        return Graph.from_edges(k, [(0, 1)] if k == 2 else [])
    if delta_max < 2:
        raise GenerationFailed("caterpillars on more than 2 vertices need max degree >= 2")
    spine = int(rng.integers(max(2, k // 3), k + 1)) if delta_max > 2 else k
    edges = [(i, i + 1) for i in range(spine - 1)]
    deg = [0] * k
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    for v in range(spine, k):
        open_ = [u for u in range(spine) if deg[u] < delta_max]
        if not open_:
            # spine saturated: extend it instead
            edges.append((v - 1, v))
            deg[v - 1] += 1
            deg[v] += 1
            continue
        u = open_[int(rng.integers(len(open_)))]
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
    g = Graph.from_edges(k, edges)
    if g.max_degree > delta_max:
        raise GenerationFailed("caterpillar degree cap violated")
    return g.relabel([int(x) for x in rng.permutation(k)])


def _triangulation_chords(lo: int, hi: int, rng, out: list):
    # random triangulation of the polygon lo..hi (consecutive ids)
    if hi - lo < 2:
        return
    apex = int(rng.integers(lo + 1, hi))
    if apex - lo > 1:
        out.append((lo, apex))
    if hi - apex > 1:
        out.append((apex, hi))
    _triangulation_chords(lo, apex, rng, out)
    _triangulation_chords(apex, hi, rng, out)


def random_outerplanar(k: int, delta_max: int, rng) -> Graph:
    """Hamiltonian path plus random non-crossing chords, degree at most ``delta_max``."""
    if k <= 2:
        return Graph.from_edges(k, [(0, 1)] if k == 2 else [])
    if delta_max < 2:
        raise GenerationFailed("outerplanar graphs on more than 2 vertices need max degree >= 2")
    edges = [(i, i + 1) for i in range(k - 1)]
    deg = [1] + [2] * (k - 2) + [1]
    chords = [(0, k - 1)] if k > 2 else []
    _triangulation_chords(0, k - 1, rng, chords)
    for idx in rng.permutation(len(chords)):
        a, b = chords[int(idx)]
        if rng.random() < 0.5 and deg[a] < delta_max and deg[b] < delta_max:
            edges.append((a, b))
            deg[a] += 1
            deg[b] += 1
    return Graph.from_edges(k, edges).relabel([int(x) for x in rng.permutation(k)])


_MAKERS = {
    "random-trees": random_tree,
    "caterpillars": caterpillar,
    "random-outerplanar": random_outerplanar,
}


def generate_instance(kind: str, n: int, delta_max: int, seed: int = 0, fill: float = 0.9) -> GraphSequence:
    """A validated sequence of graphs of order at most ``n``.

    ``gyarfas-exact`` yields trees ``T_1..T_n`` with ``v(T_i) = i``. The other
    kinds draw orders uniformly from ``[2, n]`` and append graphs until the
    next one would push the edge sum above ``fill * C(n, 2)``.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown instance kind {kind!r}")
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed)
    if kind == "gyarfas-exact":
        graphs = [random_tree(k, delta_max, rng) for k in range(1, n + 1)]
    else:
        maker = _MAKERS[kind]
        target = fill * comb(n, 2)
        graphs = []
        total = 0
        while True:
            k = int(rng.integers(2, n + 1))
            g = maker(k, delta_max, rng)
            if total + g.n_edges > target:
                break
            graphs.append(g)
            total += g.n_edges
        if not graphs:
            raise GenerationFailed("fill target too small for a single graph")
    seq = GraphSequence(tuple(graphs), n, delta_max)
    rep = validate_sequence(seq)
    if not rep.passed:
        raise GenerationFailed(f"generated sequence fails validation: {rep.failed_clauses()}")
    return seq
