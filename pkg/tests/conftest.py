import numpy as np
from hypothesis import strategies as st

from graphpack.graph import Graph
from graphpack.instances import random_tree


@st.composite
def trees(draw, min_order=2, max_order=40, max_degree=4):
    k = draw(st.integers(min_order, max_order))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_tree(k, max_degree, np.random.default_rng(seed))


@st.composite
def small_graphs(draw, min_order=1, max_order=7):
    k = draw(st.integers(min_order, max_order))
    pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    return Graph.from_edges(k, chosen)


@st.composite
def connected_small_graphs(draw, min_order=2, max_order=6):
    """Spanning tree plus random extra edges."""
    k = draw(st.integers(min_order, max_order))
    edges = set()
    for v in range(1, k):
        edges.add((draw(st.integers(0, v - 1)), v))
    pairs = [(a, b) for a in range(k) for b in range(a + 1, k) if (a, b) not in edges]
    if pairs:
        edges |= set(draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))))
    return Graph.from_edges(k, sorted(edges))


def component_census(g, separator, s):
    """Census and component lists of ``g`` minus ``separator`` (test helper)."""
    from graphpack.isotypes import census

    sep = set(separator)
    comps = [sorted(c) for c in g.components(sep)]
    bnd = {v for v in range(g.n_vertices) if v not in sep and any(w in sep for w in g.neighbors(v))}
    pairs = []
    for c in comps:
        sub, labels = g.induced_subgraph(c)
        pairs.append((sub, [k for k, v in enumerate(labels) if v in bnd]))
    return census(pairs, s), comps


def min_chunks_dp(nu, v, m, eta):
    """Fewest parts summing to ``nu`` with each part p satisfying p*v <= (1-eta)m."""
    from fractions import Fraction

    limit = (1 - Fraction(eta)) * m
    sizes = [p for p in range(1, nu + 1) if p * v <= limit]
    INF = float("inf")
    best = [0] + [INF] * nu
    for x in range(1, nu + 1):
        for p in sizes:
            if p <= x and best[x - p] + 1 < best[x]:
                best[x] = best[x - p] + 1
    return best[nu]


ACCEPTANCE_LINES: list = []


def report(line: str) -> None:
    """Record an acceptance verdict; all of them are repeated in the terminal summary."""
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
