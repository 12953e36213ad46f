"""Canonical forms of small graphs with a marked boundary, and type census."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product

from .graph import Graph


class SizeOutOfRange(ValueError):
    pass


@dataclass(frozen=True, order=False)
class IsoType:
    """A small graph ``R`` in canonical vertex order plus a boundary subset ``B``."""

    order: int
    edges: tuple
    boundary: tuple

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def density(self) -> Fraction:
        return Fraction(len(self.edges), self.order)

    @property
    def boundary_mask(self) -> int:
        return sum(1 << b for b in self.boundary)

    @property
    def graph(self) -> Graph:
        return Graph(self.order, frozenset(self.edges))

    def sort_key(self):
        # density non-increasing; ties by order, edge list, boundary mask
        return (-self.density, self.order, self.edges, self.boundary_mask)

    def to_json(self) -> dict:
        return {"v": self.order, "edges": [list(e) for e in self.edges], "boundary": list(self.boundary)}

    @classmethod
    def from_json(cls, obj: dict) -> "IsoType":
        return cls(int(obj["v"]), tuple(tuple(e) for e in obj["edges"]), tuple(obj["boundary"]))

    def __repr__(self) -> str:
        return f"IsoType(v={self.order}, e={list(self.edges)}, B={list(self.boundary)})"


def _refine(g: Graph, boundary: set) -> list[int]:
    """Stable colouring by iterated neighbourhood refinement.

    Colours are ranks of label-free signatures, so the ordered partition is
    invariant under relabelling.
    """
    n = g.n_vertices

    def ranked(sigs):
        ranks = {sig: r for r, sig in enumerate(sorted(set(sigs)))}
        return [ranks[s] for s in sigs]

    colour = ranked([(1 if v in boundary else 0, g.degree(v)) for v in range(n)])
    while True:
        new = ranked(
            [(colour[v], tuple(sorted(colour[w] for w in g.neighbors(v)))) for v in range(n)]
        )
        # the first signature entry is the old colour, so ``new`` refines ``colour``
        if len(set(new)) == len(set(colour)):
            return colour
        colour = new


def canonical_labeling(g: Graph, boundary) -> tuple[IsoType, list[int]]:
    """Return the canonical type and a map ``vertex -> canonical position``.

    Vertices are first split into cells by refined colour; the canonical form
    is the lexicographically smallest adjacency encoding over all orderings
    that respect the cell order.
    """
    n = g.n_vertices
    bset = set(boundary)
    if not bset <= set(range(n)):
        raise ValueError("boundary must be a subset of the vertices")
    colour = _refine(g, bset)
    cells = {}
    for v in range(n):
        cells.setdefault(colour[v], []).append(v)
    cell_list = [cells[c] for c in sorted(cells)]
    adj = [0] * n
    for u, v in g.edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u

    best_code = None
    best_order = None
    for parts in product(*(permutations(c) for c in cell_list)):
        order = [v for part in parts for v in part]
        pos = [0] * n
        for k, v in enumerate(order):
            pos[v] = k
        code = []
        for v in order:
            row = 0
            a = adj[v]
            while a:
                low = a & -a
                row |= 1 << pos[low.bit_length() - 1]
                a ^= low
            code.append(row)
        code = tuple(code)
        if best_code is None or code < best_code:
            best_code, best_order = code, order
    pos = [0] * n
    for k, v in enumerate(best_order):
        pos[v] = k
    edges = tuple(sorted((min(pos[u], pos[v]), max(pos[u], pos[v])) for u, v in g.edges))
    bnd = tuple(sorted(pos[b] for b in bset))
    return IsoType(n, edges, bnd), pos


def canonicalize(component: Graph, boundary, s: int | None = None) -> IsoType:
    """Canonical IsoType of a component with marked boundary (order 2..s)."""
    n = component.n_vertices
    if n < 2 or (s is not None and n > s):
        raise SizeOutOfRange(f"component order {n} outside [2, {s}]")
    return canonical_labeling(component, boundary)[0]


def sigma_bound(s: int) -> int:
    """Upper bound ``2^(s^2)`` on the number of isomorphism types."""
    if s < 2:
        raise ValueError("s must be at least 2")
    return 2 ** (s * s)


@dataclass
class TypeCensus:
    """How many components of each type occur, ordered by density.

    ``members`` lists, per type, the indices of the input components and
    ``labelings`` their canonical position maps (same order).
    """

    counts: dict
    ordering: list
    members: dict = field(default_factory=dict)
    labelings: dict = field(default_factory=dict)

    @property
    def total_vertices(self) -> int:
        return sum(t.order * c for t, c in self.counts.items())

    @property
    def total_edges(self) -> int:
        return sum(t.n_edges * c for t, c in self.counts.items())

    def nu(self, t: IsoType) -> int:
        return self.counts.get(t, 0)


def census(components, s: int | None = None) -> TypeCensus:
    """Census of ``(graph, boundary)`` pairs by isomorphism type."""
    counts: dict = {}
    members: dict = {}
    labelings: dict = {}
    for idx, (comp, bnd) in enumerate(components):
        if comp.n_vertices < 2 or (s is not None and comp.n_vertices > s):
            raise SizeOutOfRange(f"component order {comp.n_vertices} outside [2, {s}]")
        t, pos = canonical_labeling(comp, bnd)
        counts[t] = counts.get(t, 0) + 1
        members.setdefault(t, []).append(idx)
        labelings.setdefault(t, []).append(pos)
    ordering = sorted(counts, key=IsoType.sort_key)
    return TypeCensus(counts, ordering, members, labelings)
