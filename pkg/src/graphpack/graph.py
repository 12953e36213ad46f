"""Graph representation, sequence validation and packing verification."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

import numpy as np


def _norm(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Immutable simple graph on vertices ``0..n_vertices-1``.

    ``edges`` holds normalized pairs ``(u, v)`` with ``u < v``. The adjacency
    lists are derived once at construction and kept sorted.
    """

    n_vertices: int
    edges: frozenset
    adjacency: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_vertices < 0:
            raise ValueError("n_vertices must be non-negative")
        adj = [[] for _ in range(self.n_vertices)]
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < v < self.n_vertices):
                raise ValueError(f"edge {(u, v)} not normalized or out of range")
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(a)) for a in adj))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        """Build a graph, rejecting self-loops and parallel edges."""
        seen = set()
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise ValueError(f"self-loop at {u}")
            key = _norm(u, v)
            if key in seen:
                raise ValueError(f"parallel edge {key}")
            seen.add(key)
        return cls(n, frozenset(seen))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def neighbors(self, v: int) -> tuple:
        return self.adjacency[v]

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    @property
    def min_degree(self) -> int:
        return min((len(a) for a in self.adjacency), default=0)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def isolated_vertices(self) -> list[int]:
        return [v for v, a in enumerate(self.adjacency) if not a]

    def components(self, removed: Iterable[int] = ()) -> list[list[int]]:
        """Connected components of ``G - removed`` as sorted vertex lists.

        Components are listed by their smallest vertex.
        """
        gone = set(removed)
        seen = [False] * self.n_vertices
        out = []
        for start in range(self.n_vertices):
            if seen[start] or start in gone:
                continue
            seen[start] = True
            stack, comp = [start], []
            while stack:
                x = stack.pop()
                comp.append(x)
                for y in self.adjacency[x]:
                    if not seen[y] and y not in gone:
                        seen[y] = True
                        stack.append(y)
            out.append(sorted(comp))
        return out

    def is_forest(self) -> bool:
        return self.n_edges == self.n_vertices - len(self.components())

    def induced_subgraph(self, vertices: Sequence[int]) -> tuple["Graph", list[int]]:
        """Return ``(subgraph, labels)`` where local vertex ``k`` is ``labels[k]``."""
        labels = list(vertices)
        index = {v: k for k, v in enumerate(labels)}
        sub = set()
        for v in labels:
            for w in self.adjacency[v]:
                if w in index and v < w:
                    sub.add(_norm(index[v], index[w]))
        return Graph(len(labels), frozenset(sub)), labels

    def strip_isolated(self) -> tuple["Graph", list[int]]:
        """Drop isolated vertices; returns the reduced graph and kept original ids."""
        kept = [v for v, a in enumerate(self.adjacency) if a]
        return self.induced_subgraph(kept)

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex ``v`` renamed to ``perm[v]``."""
        return Graph(self.n_vertices, frozenset(_norm(perm[u], perm[v]) for u, v in self.edges))

    def to_json(self) -> dict:
        return {"n": self.n_vertices, "edges": [list(e) for e in self.sorted_edges()]}

    @classmethod
    def from_json(cls, obj: dict) -> "Graph":
        return cls.from_edges(int(obj["n"]), obj["edges"])


def path_graph(k: int) -> Graph:
    return Graph.from_edges(k, [(i, i + 1) for i in range(k - 1)])


def cycle_graph(k: int) -> Graph:
    return Graph.from_edges(k, [(i, (i + 1) % k) for i in range(k)])


def complete_graph(k: int) -> Graph:
    return Graph.from_edges(k, [(i, j) for i in range(k) for j in range(i + 1, k)])


def star_graph(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def disjoint_union(graphs: Iterable[Graph]) -> Graph:
    edges, offset = [], 0
    for g in graphs:
        edges.extend((u + offset, v + offset) for u, v in g.edges)
        offset += g.n_vertices
    return Graph.from_edges(offset, edges)


@dataclass(frozen=True)
class GraphSequence:
    """An ordered sequence of graphs to be packed into a clique of order about ``n``.

    ``separations`` optionally carries one separation per graph (in the ids of
    the graph as given, isolated vertices included).
    """

    graphs: tuple
    n: int
    delta_max: int
    separations: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if self.separations is not None:
            seps = tuple(self.separations)
            if len(seps) != len(self.graphs):
                raise ValueError("one separation per graph required")
            object.__setattr__(self, "separations", seps)

    def __len__(self) -> int:
        return len(self.graphs)

    @property
    def edge_sum(self) -> int:
        return sum(g.n_edges for g in self.graphs)

    def to_json(self) -> dict:
        out = {"n": self.n, "delta": self.delta_max, "graphs": [g.to_json() for g in self.graphs]}
        if self.separations is not None:
            out["separations"] = [None if s is None else s.to_json() for s in self.separations]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "GraphSequence":
        graphs = [Graph.from_json(g) for g in obj["graphs"]]
        seps = None
        if obj.get("separations") is not None:
            from .separation import Separation

            seps = [None if s is None else Separation.from_json(s) for s in obj["separations"]]
        return cls(tuple(graphs), int(obj["n"]), int(obj["delta"]), seps)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "GraphSequence":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class Violation:
    clause: str  # "a-order", "a-degree", "b-edge-sum", "isolated"
    graph: int | None
    detail: str


@dataclass
class ValidationReport:
    passed: bool
    violations: list
    edge_sum: int
    capacity: int
    isolated_stripped: int = 0

    def failed_clauses(self) -> set:
        return {v.clause for v in self.violations if v.clause != "isolated"}


def validate_sequence(seq: GraphSequence) -> ValidationReport:
    """Check the degree/order clause, the edge-sum clause and isolated vertices.

    Isolated vertices are reported but do not fail the check: they are
    stripped before packing and re-attached afterwards.
    """
    if len(seq.graphs) == 0:
        raise ValueError("sequence must contain at least one graph")
    violations = []
    stripped = 0
    for i, g in enumerate(seq.graphs):
        iso = g.isolated_vertices()
        if iso:
            stripped += len(iso)
            violations.append(Violation("isolated", i, f"{len(iso)} isolated vertices stripped"))
        order = g.n_vertices - len(iso)
        if order > seq.n:
            violations.append(Violation("a-order", i, f"v(F_{i}) = {order} > n = {seq.n}"))
        if g.max_degree > seq.delta_max:
            violations.append(
                Violation("a-degree", i, f"max degree {g.max_degree} > {seq.delta_max}")
            )
    total = seq.edge_sum
    cap = comb(seq.n, 2)
    if total > cap:
        violations.append(Violation("b-edge-sum", None, f"sum of edges {total} > C(n,2) = {cap}"))
    passed = not any(v.clause != "isolated" for v in violations)
    return ValidationReport(passed, violations, total, cap, stripped)


class EdgeTable:
    """Owner table over the edge slots of ``K_N`` in triangular layout.

    Each slot stores the index of the graph using it, or -1.
    """

    def __init__(self, n: int):
        self.n = n
        self.owner = np.full(n * (n - 1) // 2, -1, dtype=np.int64)
        self.used = 0
        self.peak = 0

    def index(self, u: int, v: int) -> int:
        if u > v:
            u, v = v, u
        if u == v or u < 0 or v >= self.n:
            raise IndexError(f"no edge slot for {(u, v)} in K_{self.n}")
        return u * (2 * self.n - u - 1) // 2 + (v - u - 1)

    def get(self, u: int, v: int) -> int:
        return int(self.owner[self.index(u, v)])

    def is_free(self, u: int, v: int) -> bool:
        return self.owner[self.index(u, v)] < 0

    def mark(self, u: int, v: int, who: int) -> int:
        """Claim slot ``{u, v}`` for ``who``; returns the previous owner (-1 if free).

        A conflicting claim leaves the original owner in place.
        """
        k = self.index(u, v)
        prev = int(self.owner[k])
        if prev < 0:
            self.owner[k] = who
            self.used += 1
            self.peak = max(self.peak, self.used)
        return prev

    def release(self, u: int, v: int) -> None:
        k = self.index(u, v)
        if self.owner[k] >= 0:
            self.owner[k] = -1
            self.used -= 1

    def count_used(self) -> int:
        return int(np.count_nonzero(self.owner >= 0))


@dataclass
class PackingMap:
    """Per-graph injective vertex maps into the host clique ``K_{host_order}``."""

    maps: list
    host_order: int

    def to_json(self) -> dict:
        return {
            "N": self.host_order,
            "maps": [
                {"graph": i, "map": [[int(v), int(h)] for v, h in sorted(m.items())]}
                for i, m in enumerate(self.maps)
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PackingMap":
        maps = [dict() for _ in obj["maps"]]
        for entry in obj["maps"]:
            maps[int(entry["graph"])] = {int(v): int(h) for v, h in entry["map"]}
        return cls(maps, int(obj["N"]))


@dataclass(frozen=True)
class PackingProblem:
    kind: str  # "missing", "range", "injective", "edge-reuse", "bound", "count"
    graph: int | None
    detail: str
    edge: tuple | None = None


@dataclass
class VerifyReport:
    passed: bool
    problems: list
    edges_used: int
    host_order: int

    def kinds(self) -> set:
        return {p.kind for p in self.problems}


def verify_packing(seq: GraphSequence, pm: PackingMap, N: int) -> VerifyReport:
    """Independently check that ``pm`` packs ``seq`` into ``K_N``.

    Checks totality and injectivity of every map, that every image lies in
    ``0..N-1``, that no host edge is used twice, and that the image edge set of
    each graph is an isomorphic copy of it. Every violation is pinpointed.
    """
    problems = []
    if pm.host_order > N:
        problems.append(PackingProblem("bound", None, f"host order {pm.host_order} > N = {N}"))
    if len(pm.maps) != len(seq.graphs):
        problems.append(
            PackingProblem("count", None, f"{len(pm.maps)} maps for {len(seq.graphs)} graphs")
        )
    owner: dict = {}
    used = 0
    for i, g in enumerate(seq.graphs):
        if i >= len(pm.maps):
            break
        m = pm.maps[i]
        missing = [v for v in range(g.n_vertices) if v not in m]
        if missing:
            problems.append(PackingProblem("missing", i, f"vertices {missing[:8]} unmapped"))
            continue
        images = [m[v] for v in range(g.n_vertices)]
        bad = [h for h in images if not (0 <= h < N)]
        if bad:
            problems.append(PackingProblem("range", i, f"host ids {bad[:8]} outside 0..{N - 1}"))
            continue
        if len(set(images)) != len(images):
            problems.append(PackingProblem("injective", i, "two vertices share a host vertex"))
            continue
        inv = {h: v for v, h in m.items() if v < g.n_vertices}
        image_edges = set()
        for u, v in g.edges:
            key = _norm(m[u], m[v])
            image_edges.add(key)
            if key in owner:
                problems.append(
                    PackingProblem(
                        "edge-reuse", i, f"host edge {key} already used by graph {owner[key]}", key
                    )
                )
            else:
                owner[key] = i
                used += 1
        # the image, pulled back through the inverse map, must be exactly E(F_i)
        back = {_norm(inv[a], inv[b]) for a, b in image_edges}
        if back != set(g.edges):
            problems.append(PackingProblem("isomorphism", i, "image is not a copy of the graph"))
    return VerifyReport(not problems, problems, used, N)
