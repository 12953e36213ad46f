"""Greedy embedding of separator vertices into the reserve set ``Y``."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graph import EdgeTable, Graph
from .separation import as_fraction


class NoCandidate(RuntimeError):
    def __init__(self, graph: int, vertex: int, dominant: str, sizes: dict):
        self.graph, self.vertex, self.dominant, self.sizes = graph, vertex, dominant, sizes
        super().__init__(
            f"graph {graph}, separator vertex {vertex}: no candidate in Y "
            f"(largest forbidden set {dominant}, sizes {sizes})"
        )


@dataclass
class ReservePartition:
    """Host ``0..N_X-1`` is ``X``; ``N_X..N-1`` is ``Y``. One edge table covers ``K_N``."""

    n_x: int
    n_y: int
    edges: EdgeTable
    usage: np.ndarray = None
    cap: Fraction | None = None

    def __post_init__(self):
        if self.usage is None:
            self.usage = np.zeros(self.n_y, dtype=np.int64)
        if self.edges.n != self.n_x + self.n_y:
            raise ValueError("edge table order must equal |X| + |Y|")

    @property
    def N(self) -> int:
        return self.n_x + self.n_y

    @property
    def Y(self) -> np.ndarray:
        return np.arange(self.n_x, self.N)

    def usage_cap_ok(self, count: int) -> bool:
        return self.cap is None or count <= self.cap

    def usage_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["y", "usage"])
        for k, c in enumerate(self.usage):
            w.writerow([self.n_x + k, int(c)])
        return buf.getvalue()


def usage_cap(delta, n: int, n_y: int) -> Fraction:
    """``3 delta n^2 / |Y|`` as an exact rational."""
    return 3 * as_fraction(delta) * n * n / n_y


def make_partition(n_x: int, n_y: int, edges: EdgeTable | None = None, delta=None, n=None) -> ReservePartition:
    if n_y < 1:
        raise ValueError("reserve set Y must be non-empty")
    if edges is None:
        edges = EdgeTable(n_x + n_y)
    cap = usage_cap(delta, n, n_y) if delta is not None and n is not None else None
    return ReservePartition(n_x, n_y, edges, cap=cap)


def _used_against(part: ReservePartition, x: int) -> np.ndarray:
    """Boolean mask over ``Y``: is edge ``{x, y}`` already used."""
    ys = part.Y
    lo = np.minimum(ys, x)
    hi = np.maximum(ys, x)
    n = part.N
    idx = lo * (2 * n - lo - 1) // 2 + (hi - lo - 1)
    mask = part.edges.owner[idx] >= 0
    mask[ys == x] = True
    return mask


@dataclass
class EmbedConstraintSet:
    injective: set  # (P1') images of already embedded separator vertices of the same graph
    crossing: set  # (P2') y with a used edge to an X-image of a component neighbour
    inside: set  # (P3') y with a used edge to the Y-image of an embedded separator neighbour
    capped: set  # y at the usage cap (strict mode only)
    candidates: list

    def sizes(self) -> dict:
        return {
            "P1": len(self.injective),
            "P2": len(self.crossing),
            "P3": len(self.inside),
            "cap": len(self.capped),
        }

    def dominant(self) -> str:
        s = self.sizes()
        return max(s, key=lambda k: (s[k], k))


def forbidden_sets(u: int, g: Graph, hmap: dict, separator, part: ReservePartition, strict_cap: bool = False) -> EmbedConstraintSet:
    """The exact forbidden sets for placing separator vertex ``u`` of ``g``.

    ``hmap`` holds the images fixed so far for ``g`` (component vertices in
    ``X``, embedded separator vertices in ``Y``).
    """
    ys = part.Y
    inj = {hmap[w] for w in separator if w in hmap}
    cross_mask = np.zeros(part.n_y, dtype=bool)
    inside_mask = np.zeros(part.n_y, dtype=bool)
    for w in g.neighbors(u):
        if w not in hmap:
            continue
        if w in separator:
            inside_mask |= _used_against(part, hmap[w])
        else:
            cross_mask |= _used_against(part, hmap[w])
    crossing = {int(y) for y in ys[cross_mask]}
    inside = {int(y) for y in ys[inside_mask]}
    capped = set()
    if strict_cap and part.cap is not None:
        capped = {int(ys[k]) for k in range(part.n_y) if part.usage[k] + 1 > part.cap}
    bad = inj | crossing | inside | capped
    cand = [int(y) for y in ys if int(y) not in bad]
    return EmbedConstraintSet(inj, crossing, inside, capped, cand)


@dataclass
class EmbedStats:
    steps: int = 0
    min_candidates: int | None = None
    half_y_violations: int = 0
    max_usage: int = 0
    cap: float | None = None
    cap_violations: int = 0
    max_sizes: dict = field(default_factory=lambda: {"P1": 0, "P2": 0, "P3": 0, "cap": 0})
    crossing_edges: int = 0
    inside_edges: int = 0
    trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "steps": self.steps,
            "min_candidates": self.min_candidates,
            "half_y_violations": self.half_y_violations,
            "max_usage": self.max_usage,
            "cap": self.cap,
            "cap_violations": self.cap_violations,
            "max_forbidden": dict(self.max_sizes),
            "crossing_edges": self.crossing_edges,
            "inside_edges": self.inside_edges,
        }


def embed_separators(
    graphs,
    separators,
    h: dict,
    part: ReservePartition,
    order=None,
    strict: bool = False,
    keep_trace: bool = False,
):
    """Extend the maps ``h`` (component vertices -> X) to the separators.

    Graphs are taken in ``order`` (default input order) and separator
    vertices in ascending id. Each vertex goes to the least-used candidate,
    ties to the smallest id. Component-separator edges are claimed when the
    separator vertex is placed; separator-separator edges when their second
    endpoint is placed. Strict mode also forbids vertices at the usage cap.
    """
    out = {i: dict(mp) for i, mp in h.items()}
    stats = EmbedStats(cap=float(part.cap) if part.cap is not None else None)
    order = range(len(graphs)) if order is None else order
    half = Fraction(part.n_y, 2)
    for i in order:
        g = graphs[i]
        sep = set(separators[i])
        hmap = out.setdefault(i, {})
        for u in sorted(sep):
            cs = forbidden_sets(u, g, hmap, sep, part, strict_cap=strict)
            sizes = cs.sizes()
            for k, v in sizes.items():
                stats.max_sizes[k] = max(stats.max_sizes[k], v)
            nc = len(cs.candidates)
            stats.steps += 1
            stats.min_candidates = nc if stats.min_candidates is None else min(stats.min_candidates, nc)
            if nc <= half:
                stats.half_y_violations += 1
            if keep_trace:
                stats.trace.append((i, u, nc, sizes))
            if not cs.candidates:
                raise NoCandidate(i, u, cs.dominant(), sizes)
            cand = np.asarray(cs.candidates)
            use = part.usage[cand - part.n_x]
            y = int(cand[int(np.argmin(use))])  # argmin takes the first, i.e. smallest id
            hmap[u] = y
            part.usage[y - part.n_x] += 1
            k = int(part.usage[y - part.n_x])
            stats.max_usage = max(stats.max_usage, k)
            if part.cap is not None and k > math.ceil(part.cap):
                stats.cap_violations += 1
            for w in g.neighbors(u):
                if w not in hmap or w == u:
                    continue
                if w in sep and w != u:
                    prev = part.edges.mark(hmap[w], y, i)
                    stats.inside_edges += 1
                else:
                    prev = part.edges.mark(hmap[w], y, i)
                    stats.crossing_edges += 1
                if prev != -1:
                    raise AssertionError(f"edge {(hmap[w], y)} already used by graph {prev}")
    return out, stats
