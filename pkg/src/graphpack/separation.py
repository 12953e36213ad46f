"""Small separators leaving only components of order 2..s.

Several concrete strategies stand in for the an existential separator bound;
every result is checked against the separation invariants a posteriori.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable

from .graph import Graph

STRATEGIES = ("tree-centroid", "tree-dp", "bfs-layer", "exhaustive-tiny", "user-callback", "auto")
EXHAUSTIVE_LIMIT = 16


class BudgetExceeded(Exception):
    """The separator needed is larger than ``delta * v(G)``."""

    def __init__(self, required: int, allowed: float):
        self.required = required
        self.allowed = allowed
        super().__init__(f"separator needs {required} vertices, budget is {allowed:.3f}")


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class Separation:
    separator: frozenset
    components: tuple
    delta: Fraction
    s_max: int
    # diagnostics, not serialized
    rounds: tuple = field(default=(), compare=False)
    candidate_size: int = field(default=0, compare=False)

    def check(self, g: Graph) -> list[str]:
        """List every violated invariant of this separation for ``g``."""
        problems = []
        if len(self.separator) > self.delta * g.n_vertices:
            problems.append(f"|U| = {len(self.separator)} > delta*v = {float(self.delta * g.n_vertices)}")
        covered = sorted(v for c in self.components for v in c)
        expected = sorted(set(range(g.n_vertices)) - set(self.separator))
        if covered != expected:
            problems.append("components do not partition V - U")
        for c in self.components:
            if not (2 <= len(c) <= self.s_max):
                problems.append(f"component of order {len(c)} outside [2, {self.s_max}]")
        flood = sorted(tuple(c) for c in g.components(self.separator))
        if flood != sorted(tuple(sorted(c)) for c in self.components):
            problems.append("components differ from the connected components of G - U")
        return problems

    def boundary(self, g: Graph) -> set:
        """Vertices outside the separator with a neighbour inside it."""
        sep = self.separator
        return {v for u in sep for v in g.neighbors(u) if v not in sep}

    def to_json(self) -> dict:
        return {
            "separator": sorted(self.separator),
            "components": [sorted(c) for c in self.components],
        }

    @classmethod
    def from_json(cls, obj: dict, delta=1, s_max: int | None = None) -> "Separation":
        comps = tuple(tuple(sorted(c)) for c in obj["components"])
        s = s_max if s_max is not None else max((len(c) for c in comps), default=2)
        return cls(frozenset(obj["separator"]), comps, as_fraction(delta), s)


@dataclass
class SeparatorConfig:
    c_family: float = 1.0
    strategy: str = "tree-dp"
    callback: Callable | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "user-callback" and self.callback is None:
            raise ValueError("user-callback strategy needs a callback")


def iterated_separator_bound(n: int, c_g, i: int) -> float:
    """Upper bound ``6 c n^(1/2) 2^(i/2)`` on the separator after ``i`` halving rounds."""
    if i < 1:
        raise ValueError("i must be >= 1")
    if n == 0:
        return 0.0
    return 6 * float(c_g) * math.sqrt(n) * 2 ** (i / 2)


# -- per-component cut rules --------------------------------------------------


def tree_centroid(g: Graph) -> int:
    """Centroid of a tree: the vertex minimizing the largest remaining subtree.

    Ties go to the smallest vertex id.
    """
    n = g.n_vertices
    if n == 0:
        raise ValueError("empty tree")
    parent = [-1] * n
    order = [0]
    seen = [False] * n
    seen[0] = True
    for x in order:
        for y in g.neighbors(x):
            if not seen[y]:
                seen[y] = True
                parent[y] = x
                order.append(y)
    size = [1] * n
    for x in reversed(order[1:]):
        size[parent[x]] += size[x]
    best, best_v = n + 1, -1
    for v in range(n):
        worst = n - size[v]
        for y in g.neighbors(v):
            if y != parent[v]:
                worst = max(worst, size[y])
        if worst < best:
            best, best_v = worst, v
    return best_v


def _bfs_layers(g: Graph, root: int) -> list[list[int]]:
    dist = {root: 0}
    layers = [[root]]
    while True:
        nxt = []
        for x in layers[-1]:
            for y in g.neighbors(x):
                if y not in dist:
                    dist[y] = len(layers)
                    nxt.append(y)
        if not nxt:
            return layers
        layers.append(sorted(nxt))


def bfs_layer_cut(g: Graph) -> set:
    """Remove one BFS layer from a pseudo-peripheral root.

    Among layers whose removal leaves both sides with at most 2/3 of the
    vertices, the smallest one is taken (the median layer always qualifies).
    """
    n = g.n_vertices
    layers = _bfs_layers(g, 0)
    far = layers[-1][0]
    layers = _bfs_layers(g, far)
    if len(layers) <= 2:
        # diameter <= 2: fall back to a maximum-degree vertex
        return {max(range(n), key=lambda v: (g.degree(v), -v))}
    sizes = [len(layer) for layer in layers]
    before = 0
    best = None
    for k, size in enumerate(sizes):
        after = n - before - size
        if 3 * before <= 2 * n and 3 * after <= 2 * n:
            key = (size, abs(before - after), k)
            if best is None or key < best[0]:
                best = (key, k)
        before += size
    if best is None:
        before, k = 0, 0
        while 2 * (before + sizes[k]) < n:
            before += sizes[k]
            k += 1
        return set(layers[k])
    return set(layers[best[1]])


def exhaustive_min_separator(g: Graph, s: int) -> set:
    """Smallest ``U`` with every component of ``G - U`` of order in ``[2, s]``.

    Plain subset enumeration by increasing size; only for ``v(G) <= 16``.
    """
    n = g.n_vertices
    if n > EXHAUSTIVE_LIMIT:
        raise ValueError(f"exhaustive search limited to {EXHAUSTIVE_LIMIT} vertices")
    for k in range(n + 1):
        for cand in combinations(range(n), k):
            comps = g.components(cand)
            if all(2 <= len(c) <= s for c in comps):
                return set(cand)
    return set(range(n))


def tree_dp_separator(g: Graph, s: int) -> set:
    """Minimum separator of a forest leaving components of order in ``[2, s]``.

    Dynamic programme over rooted subtrees. For a vertex ``v`` it keeps the
    cheapest cost with ``v`` in the separator, and for each ``k <= s`` the
    cheapest cost with ``v`` outside it and an open component of order ``k``.
    """
    n = g.n_vertices
    INF = float("inf")
    chosen: set = set()
    seen = [False] * n
    for root in range(n):
        if seen[root]:
            continue
        parent = {root: -1}
        order = [root]
        seen[root] = True
        for x in order:
            for y in g.neighbors(x):
                if not seen[y]:
                    seen[y] = True
                    parent[y] = x
                    order.append(y)
        cut = {}
        opened = {}
        # back-pointers for reconstruction
        cut_choice = {}
        open_choice = {}
        for v in reversed(order):
            kids = [y for y in g.neighbors(v) if parent.get(y) == v and y != parent[v]]
            # v in separator: each child either in separator or closes a component of order 2..s
            total = 1
            picks = []
            for c in kids:
                closed = min(((opened[c][k], k) for k in range(2, s + 1)), default=(INF, 0))
                if cut[c] <= closed[0]:
                    total += cut[c]
                    picks.append((c, 0))
                else:
                    total += closed[0]
                    picks.append((c, closed[1]))
            cut[v] = total
            cut_choice[v] = picks
            # v outside separator: knapsack over open component order
            table = [INF] * (s + 1)
            table[1] = 0
            trace = [[] for _ in range(s + 1)]
            for c in kids:
                new = [INF] * (s + 1)
                new_trace = [None] * (s + 1)
                for k in range(1, s + 1):
                    if table[k] == INF:
                        continue
                    # child in separator
                    val = table[k] + cut[c]
                    if val < new[k]:
                        new[k] = val
                        new_trace[k] = trace[k] + [(c, 0)]
                    # child joins v's component
                    for kc in range(1, s + 1 - k):
                        if opened[c][kc] == INF:
                            continue
                        val = table[k] + opened[c][kc]
                        if val < new[k + kc]:
                            new[k + kc] = val
                            new_trace[k + kc] = trace[k] + [(c, kc)]
                table = new
                trace = [t if t is not None else [] for t in new_trace]
            opened[v] = table
            open_choice[v] = trace
        # root decision
        best = (cut[root], 0)
        for k in range(2, s + 1):
            if opened[root][k] < best[0]:
                best = (opened[root][k], k)
        stack = [(root, best[1])]
        while stack:
            v, state = stack.pop()
            if state == 0:
                chosen.add(v)
                stack.extend(cut_choice[v])
            else:
                stack.extend(open_choice[v][state])
    return chosen


# -- driver -------------------------------------------------------------------


def fixup_singletons(g: Graph, separator, delta, s: int, enforce_budget: bool = True) -> Separation:
    """Move every order-1 component of ``G - U0`` into the separator.

    Raises BudgetExceeded when the enlarged separator exceeds ``delta * v(G)``
    (unless ``enforce_budget`` is off).
    """
    delta = as_fraction(delta)
    u = set(separator)
    comps = g.components(u)
    singles = [c[0] for c in comps if len(c) == 1]
    u.update(singles)
    if enforce_budget and len(u) > delta * g.n_vertices:
        raise BudgetExceeded(len(u), float(delta * g.n_vertices))
    rest = [tuple(c) for c in comps if len(c) > 1]
    big = [c for c in rest if len(c) > s]
    if big:
        raise ValueError(f"component of order {len(big[0])} exceeds s = {s}")
    return Separation(frozenset(u), tuple(rest), delta, s, candidate_size=len(separator))


def _cut_component(sub: Graph, s: int, cfg: SeparatorConfig) -> set:
    if cfg.strategy == "tree-centroid":
        if not sub.is_forest():
            raise ValueError("tree-centroid strategy needs a forest")
        return {tree_centroid(sub)}
    if cfg.strategy == "bfs-layer":
        return bfs_layer_cut(sub)
    if cfg.strategy == "exhaustive-tiny":
        if sub.n_vertices <= EXHAUSTIVE_LIMIT:
            return exhaustive_min_separator(sub, s)
        return bfs_layer_cut(sub)
    if cfg.strategy == "user-callback":
        cut = set(cfg.callback(sub))
        if not cut:
            raise ValueError("callback returned an empty cut for an oversized component")
        return cut
    raise ValueError(cfg.strategy)


def separate(
    g: Graph, delta, s: int, cfg: SeparatorConfig | None = None, enforce_budget: bool = True
) -> Separation:
    """Compute a (delta, s)-separation of ``g``.

    Components larger than ``s`` are split round by round (largest first)
    until none remains, then singleton components are absorbed into the
    separator. ``tree-dp`` solves forests optimally in one pass instead;
    ``auto`` uses it on forests and ``bfs-layer`` on everything else.
    With ``enforce_budget`` off an oversized separator is returned as is.
    """
    cfg = cfg or SeparatorConfig()
    delta = as_fraction(delta)
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")
    if s < 2:
        raise ValueError("s must be at least 2")
    if g.n_vertices and g.min_degree < 1:
        raise ValueError("graph has isolated vertices")
    if cfg.strategy == "auto":
        cfg = SeparatorConfig(cfg.c_family, "tree-dp" if g.is_forest() else "bfs-layer")
    if cfg.strategy == "tree-dp":
        if not g.is_forest():
            raise ValueError("tree-dp strategy needs a forest")
        u0 = tree_dp_separator(g, s)
        sep = fixup_singletons(g, u0, delta, s, enforce_budget)
        return Separation(sep.separator, sep.components, delta, s, (), len(u0))

    u0: set = set()
    rounds = []
    comps = g.components()
    while any(len(c) > s for c in comps):
        for comp in sorted((c for c in comps if len(c) > s), key=lambda c: (-len(c), c[0])):
            sub, labels = g.induced_subgraph(comp)
            u0.update(labels[k] for k in _cut_component(sub, s, cfg))
        comps = g.components(u0)
        rounds.append(max(len(c) for c in comps) if comps else 0)
    sep = fixup_singletons(g, u0, delta, s, enforce_budget)
    return Separation(sep.separator, sep.components, delta, s, tuple(rounds), len(u0))
