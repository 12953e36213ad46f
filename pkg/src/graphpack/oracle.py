"""Independent checkers: exhaustive packer, design verifier, tree enumeration."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

from .designs import EtaFactorization, ResolvableCliqueDecomposition
from .graph import Graph, GraphSequence, PackingMap, verify_packing
from .separation import as_fraction


@dataclass
class BacktrackBudget:
    node_limit: int = 10_000_000
    time_limit: float = 60.0
    symmetry_breaking: bool = True

    def __post_init__(self):
        if self.node_limit <= 0 or self.time_limit <= 0:
            raise ValueError("budget limits must be positive")


@dataclass
class Unsat:
    nodes: int = 0
    millis: float = 0.0
    reason: str = "exhausted"


@dataclass
class BudgetExhausted:
    nodes: int = 0
    millis: float = 0.0


class _Stop(Exception):
    pass


def brute_force_pack(seq: GraphSequence, N: int, budget: BacktrackBudget | None = None):
    """Exhaustive search for an edge-disjoint packing of ``seq`` into ``K_N``.

    Returns a verified PackingMap, an Unsat, or a BudgetExhausted. Graphs are
    embedded one vertex at a time (largest graphs first, BFS order inside a
    graph). Symmetry breaking: among host vertices that no edge and no image
    of the current graph touches, only the smallest is tried, which is sound
    because any two such vertices can be swapped without changing the state.
    """
    budget = budget or BacktrackBudget()
    t0 = time.monotonic()
    graphs = list(seq.graphs)
    total = sum(g.n_edges for g in graphs)
    if total > math.comb(N, 2):
        return Unsat(0, 0.0, "edge sum exceeds C(N,2)")
    if any(g.n_vertices > N for g in graphs):
        return Unsat(0, 0.0, "a graph has more vertices than the host")

    work = sorted(
        (i for i, g in enumerate(graphs) if g.n_edges),
        key=lambda i: (-graphs[i].n_edges, -graphs[i].max_degree, i),
    )
    orders = {}
    for i in work:
        g = graphs[i]
        order, seen = [], set()
        for root in sorted(range(g.n_vertices), key=lambda v: -g.degree(v)):
            if root in seen or g.degree(root) == 0:
                continue
            seen.add(root)
            queue = [root]
            for x in queue:
                order.append(x)
                for y in sorted(g.neighbors(x), key=lambda y: -g.degree(y)):
                    if y not in seen:
                        seen.add(y)
                        queue.append(y)
        orders[i] = order

    used = [[False] * N for _ in range(N)]
    free_deg = [N - 1] * N
    touched = [0] * N  # number of used edges at a host vertex
    maps = {i: {} for i in range(len(graphs))}
    nodes = [0]

    def tick():
        nodes[0] += 1
        if nodes[0] > budget.node_limit or (nodes[0] & 1023) == 0 and time.monotonic() - t0 > budget.time_limit:
            raise _Stop

    def place(gi: int, k: int) -> bool:
        if gi == len(work):
            return True
        i = work[gi]
        g, order = graphs[i], orders[i]
        if k == len(order):
            return place(gi + 1, 0)
        tick()
        v = order[k]
        mp = maps[i]
        image = set(mp.values())
        mapped_nbrs = [mp[w] for w in g.neighbors(v) if w in mp]
        need = g.degree(v)
        tried_fresh = False
        for x in range(N):
            if x in image or free_deg[x] < need:
                continue
            if budget.symmetry_breaking and touched[x] == 0:
                if tried_fresh:
                    continue
                tried_fresh = True
            if any(used[x][y] for y in mapped_nbrs):
                continue
            for y in mapped_nbrs:
                used[x][y] = used[y][x] = True
                free_deg[x] -= 1
                free_deg[y] -= 1
                touched[x] += 1
                touched[y] += 1
            mp[v] = x
            if place(gi, k + 1):
                return True
            del mp[v]
            for y in mapped_nbrs:
                used[x][y] = used[y][x] = False
                free_deg[x] += 1
                free_deg[y] += 1
                touched[x] -= 1
                touched[y] -= 1
        return False

    try:
        ok = place(0, 0)
    except _Stop:
        return BudgetExhausted(nodes[0], (time.monotonic() - t0) * 1000)
    millis = (time.monotonic() - t0) * 1000
    if not ok:
        return Unsat(nodes[0], millis)
    # isolated vertices take any hosts not used by their own graph
    out = []
    for i, g in enumerate(graphs):
        mp = maps[i]
        free = iter(x for x in range(N) if x not in set(mp.values()))
        for v in range(g.n_vertices):
            if v not in mp:
                mp[v] = next(free)
        out.append(dict(mp))
    pm = PackingMap(out, N)
    rep = verify_packing(seq, pm, N)
    if not rep.passed:
        raise AssertionError(f"brute force produced an invalid packing: {rep.problems[:2]}")
    pm.nodes = nodes[0]
    pm.millis = millis
    return pm


# -- design verification ----------------------------------------------------------


@dataclass
class DesignReport:
    kind: str
    passed: bool
    problems: list = field(default_factory=list)
    facts: dict = field(default_factory=dict)


def verify_design(d, eta=None) -> DesignReport:
    """Re-derive every invariant of a design from its raw blocks or placements."""
    if isinstance(d, ResolvableCliqueDecomposition):
        return _verify_rcd(d)
    if isinstance(d, EtaFactorization):
        return _verify_eta(d, eta)
    raise TypeError(f"cannot verify {type(d).__name__}")


def _verify_rcd(d: ResolvableCliqueDecomposition) -> DesignReport:
    N, m = d.host_order, d.block_order
    problems = []
    if m < 2 or N % m:
        problems.append(f"m = {m} does not divide N = {N}")
    expected = Fraction(N - 1, m - 1) if m > 1 else None
    if expected is None or d.n_factors != expected:
        problems.append(f"factor count {d.n_factors} != (N-1)/(m-1) = {expected}")
    cover: dict = {}
    for j, factor in enumerate(d.factors):
        verts = [x for block in factor for x in block]
        if sorted(verts) != list(range(N)):
            problems.append(f"factor {j}: partition violation")
        for block in factor:
            if len(block) != m or len(set(block)) != m:
                problems.append(f"factor {j}: block {tuple(block)} is not an m-set")
            for a in range(len(block)):
                for b in range(a + 1, len(block)):
                    e = frozenset((block[a], block[b]))
                    cover[e] = cover.get(e, 0) + 1
    all_edges = {frozenset((a, b)) for a in range(N) for b in range(a + 1, N)}
    missing = all_edges - set(cover)
    repeated = [e for e, c in cover.items() if c > 1]
    if missing:
        problems.append(f"{len(missing)} edges uncovered")
    if repeated:
        problems.append(f"{len(repeated)} edges covered more than once")
    facts = {"factors": d.n_factors, "edges_covered": len(cover), "edges_total": len(all_edges)}
    return DesignReport("resolvable", not problems, problems, facts)


def _verify_eta(f: EtaFactorization, eta=None) -> DesignReport:
    eta = f.eta_achieved if eta is None else as_fraction(eta)
    l = f.host_order
    pattern = f.pattern
    v, e = pattern.order, pattern.n_edges
    problems = []
    owner: dict = {}
    for k, mt in enumerate(f.matchings):
        verts = [x for pl in mt for x in pl]
        if len(verts) != len(set(verts)):
            problems.append(f"matching {k}: placements share a vertex")
        if any(not (0 <= x < l) for x in verts):
            problems.append(f"matching {k}: vertex out of range")
        for pl in mt:
            if len(pl) != v or len(set(pl)) != v:
                problems.append(f"matching {k}: placement is not injective")
                continue
            for a, b in pattern.edges:
                key = frozenset((pl[a], pl[b]))
                if key in owner:
                    problems.append(f"edge {tuple(sorted(key))} in matchings {owner[key]} and {k}")
                owner[key] = k
        if Fraction(len(mt) * v) < (1 - eta) * l:
            problems.append(f"clause (i): matching {k} has {len(mt)} placements < (1-eta) l / v(S)")
    total = l * (l - 1) // 2
    uncovered = total - len(owner)
    if uncovered > eta * total:
        problems.append(f"clause (ii): {uncovered} uncovered edges > eta C(l,2) = {float(eta * total)}")
    t = f.t
    lower = (1 - eta) * Fraction((l - 1) * v, 2 * e)
    upper = Fraction((l - 1) * v, 2 * e) / (1 - eta) if eta < 1 else None
    if t < lower:
        problems.append(f"t = {t} below (1-eta)(l-1)v/(2e) = {float(lower)}")
    if upper is not None and t > upper:
        problems.append(f"t = {t} above (l-1)v/(2e(1-eta)) = {float(upper)}")
    facts = {
        "t": t,
        "uncovered": uncovered,
        "uncovered_fraction": Fraction(uncovered, total) if total else Fraction(0),
        "t_lower": lower,
        "t_upper": upper,
        "t_upper_without_correction": Fraction((l - 1) * v, 2 * e),
    }
    return DesignReport("eta-factorization", not problems, problems, facts)


# -- tree enumeration ----------------------------------------------------------


def rooted_level_sequences(n: int):
    """All rooted trees on ``n`` vertices as canonical level sequences (Beyer-Hedetniemi)."""
    if n < 1:
        return
    seq = list(range(1, n + 1))
    while True:
        yield list(seq)
        p = max((i for i in range(n) if seq[i] != 2), default=None)
        if p is None or p == 0 or (n == 1):
            return
        q = max(i for i in range(p) if seq[i] == seq[p] - 1)
        for i in range(p, n):
            seq[i] = seq[i - (p - q)]


def level_sequence_to_graph(seq) -> Graph:
    edges = []
    stack = []
    for v, lev in enumerate(seq):
        while stack and seq[stack[-1]] >= lev:
            stack.pop()
        if stack:
            edges.append((stack[-1], v))
        stack.append(v)
    return Graph.from_edges(len(seq), edges)


def _ahu(g: Graph, root: int, parent: int = -1) -> str:
    return "(" + "".join(sorted(_ahu(g, c, root) for c in g.neighbors(root) if c != parent)) + ")"


def tree_centers(g: Graph) -> list[int]:
    n = g.n_vertices
    if n <= 2:
        return list(range(n))
    deg = [g.degree(v) for v in range(n)]
    leaves = [v for v in range(n) if deg[v] <= 1]
    remaining = n
    while remaining > 2:
        remaining -= len(leaves)
        nxt = []
        for x in leaves:
            for y in g.neighbors(x):
                deg[y] -= 1
                if deg[y] == 1:
                    nxt.append(y)
            deg[x] = 0
        leaves = nxt
    return sorted(leaves)


def tree_code(g: Graph) -> str:
    """Canonical code of a free tree: smallest AHU string over its centres."""
    return min(_ahu(g, c) for c in tree_centers(g)) if g.n_vertices else ""


def enumerate_trees(n: int) -> list[Graph]:
    """Pairwise non-isomorphic trees on ``n`` vertices."""
    seen = {}
    for seq in rooted_level_sequences(n):
        g = level_sequence_to_graph(seq)
        code = tree_code(g)
        if code not in seen:
            seen[code] = g
    return [seen[c] for c in sorted(seen)]


def tree_sequences(n: int):
    """All sequences ``(T_1, ..., T_n)`` with ``v(T_i) = i`` up to isomorphism of each tree."""
    from itertools import product

    pools = [enumerate_trees(i) for i in range(1, n + 1)]
    for combo in product(*pools):
        yield list(combo)


def is_outerplanar(g: Graph) -> bool:
    """A graph is outerplanar iff adding one vertex adjacent to all others keeps it planar."""
    h = nx.Graph()
    h.add_nodes_from(range(g.n_vertices + 1))
    h.add_edges_from(g.edges)
    apex = g.n_vertices
    h.add_edges_from((apex, v) for v in range(g.n_vertices))
    return nx.check_planarity(h)[0]
