"""Assignment phase: chunk components by type and place them on S-matchings of
the ``K_m``'s of the current ``K_m``-factor."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .designs import FULL, LayeredDesign, reserve_factor
from .graph import EdgeTable
from .isotypes import IsoType, TypeCensus
from .separation import as_fraction

ADVANCE_POLICIES = ("eager", "on-demand")


class TypeTooLarge(ValueError):
    def __init__(self, s_type: IsoType, m: int, eta):
        self.s_type = s_type
        super().__init__(f"type of order {s_type.order} does not fit (1-eta)m = {float((1 - eta) * m)}")


class OutOfFactors(RuntimeError):
    def __init__(self, graph: int, factors: int):
        self.graph = graph
        super().__init__(f"graph {graph}: all {factors} K_m-factors exhausted")


class FitViolation(RuntimeError):
    def __init__(self, graph: int, lhs, rhs):
        self.graph, self.lhs, self.rhs = graph, lhs, rhs
        super().__init__(f"graph {graph}: v(C_i) + sigma m + eta N = {float(lhs):.2f} > N = {rhs}")


# -- chunking -----------------------------------------------------------------


def chunk_capacity(v: int, m: int, eta) -> int:
    """Largest chunk: ``floor((1 - eta) m / v)`` components."""
    eta = as_fraction(eta)
    return math.floor((1 - eta) * m / v)


def closed_form_chunk_count(nu: int, v: int, m: int, eta) -> int:
    """Closed form ``ceil(nu v / ((1 - eta) m))``; exact when the capacity is integral."""
    eta = as_fraction(eta)
    return math.ceil(Fraction(nu * v) / ((1 - eta) * m))


@dataclass
class ChunkPlan:
    """Per type: capacity, chunk count and the chunks (lists of member positions)."""

    m: int
    eta: Fraction
    capacity: dict
    mu: dict
    chunks: dict

    def total_chunks(self) -> int:
        return sum(self.mu.values())


def plan_chunks(census: TypeCensus, m: int, eta) -> ChunkPlan:
    """Group the components of each type into as few chunks as possible.

    Chunk ``k`` of type ``S`` holds members ``k*c .. (k+1)*c - 1`` where
    ``c`` is the capacity, so all chunks but the last are full.
    """
    eta = as_fraction(eta)
    cap, mu, chunks = {}, {}, {}
    for t in census.ordering:
        nu = census.nu(t)
        c = chunk_capacity(t.order, m, eta)
        if nu and c < 1:
            raise TypeTooLarge(t, m, eta)
        cap[t] = c
        k = -(-nu // c) if nu else 0
        mu[t] = k
        chunks[t] = [list(range(a, min(a + c, nu))) for a in range(0, nu, c)] if nu else []
    return ChunkPlan(m, eta, cap, mu, chunks)


# -- state --------------------------------------------------------------------


@dataclass
class Placement:
    """Where one component went: block, middle factor, matching, placement slot."""

    graph: int
    component: int
    s_type: IsoType
    km: tuple
    factor: int
    matching: int
    slot: int
    hosts: tuple  # canonical position -> host vertex


@dataclass
class AssignmentState:
    layered: LayeredDesign
    advance_policy: str = "on-demand"
    cursor: int = 0
    edges: EdgeTable | None = None
    maps: dict = field(default_factory=dict)  # graph -> {vertex: host}
    placements: list = field(default_factory=list)
    graph_factor: dict = field(default_factory=dict)  # graph -> K_m-factor index
    consumed: list = field(default_factory=list)  # (km, factor, matching, s_type, n_used)
    fit_violations: list = field(default_factory=list)
    used_factors: list = field(default_factory=list)

    def __post_init__(self):
        if self.advance_policy not in ADVANCE_POLICIES:
            raise ValueError(f"unknown advance policy {self.advance_policy!r}")
        if self.edges is None:
            self.edges = EdgeTable(self.layered.N)

    def used_edges(self, j: int, b: int) -> int:
        return self.layered.state(j, b).used_edges

    def spread(self, j: int | None = None) -> int:
        """max - min used-edge count over the K_m's of factor ``j`` (default: cursor)."""
        j = self.cursor if j is None else j
        if j >= self.layered.top.n_factors:
            return 0
        counts = [self.used_edges(j, b) for b in range(self.layered.top.blocks_per_factor)]
        return max(counts) - min(counts)

    def advance(self):
        self.layered.factor_full[self.cursor] = True
        self.cursor += 1
        while self.cursor < len(self.layered.factor_full) and self.layered.factor_full[self.cursor]:
            self.cursor += 1

    def to_json(self) -> dict:
        ld = self.layered
        return {
            "N": ld.N,
            "m": ld.m,
            "l": ld.l,
            "cursor": self.cursor,
            "advance_policy": self.advance_policy,
            "factor_full": list(ld.factor_full),
            "km": [
                {
                    "km": list(k),
                    "used_edges": st.used_edges,
                    "spent_edges": st.spent_edges,
                    "full": st.full,
                    "reserved": {str(f): t.to_json() for f, t in st.reserved.items()},
                    "cursor": {str(f): c for f, c in st.cursor.items()},
                    "full_factors": sorted(st.full_factors),
                }
                for k, st in sorted(ld.states.items())
            ],
            "maps": [
                {"graph": i, "map": sorted([v, h] for v, h in mp.items())}
                for i, mp in sorted(self.maps.items())
            ],
        }

    def dump_checkpoint(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)


def new_state(layered: LayeredDesign, advance_policy: str = "on-demand") -> AssignmentState:
    return AssignmentState(layered, advance_policy)


# -- the assignment step --------------------------------------------------------


def fit_holds(v_ci: int, sigma: int, m: int, eta, N: int) -> bool:
    return v_ci + sigma * m + as_fraction(eta) * N <= N


def _route(st: AssignmentState, j: int, order_types, plan: ChunkPlan):
    """Pick a distinct K_m of factor ``j`` for each chunk, or None if impossible.

    K_m's are visited least-used first (ties by index); types come in
    density order. No state is modified.
    """
    ld = st.layered
    blocks = sorted(range(ld.top.blocks_per_factor), key=lambda b: (st.used_edges(j, b), b))
    taken = set()
    routes = []
    for t in order_types:
        for chunk in plan.chunks[t]:
            pick = None
            for b in blocks:
                if b not in taken and ld.can_accept(j, b, t):
                    pick = b
                    break
            if pick is None:
                return None
            taken.add(pick)
            routes.append((t, chunk, pick))
    return routes


def assign_component_graph(
    st: AssignmentState,
    i: int,
    census: TypeCensus,
    plan: ChunkPlan,
    components=None,
    strict_fit: bool = False,
):
    """Place every component of graph ``i``; returns its preliminary map.

    ``components[k] = (vertex labels of component k in F_i)`` in census
    member order; if omitted the map is keyed by ``(component, position)``.
    The graph goes to the current factor if its chunks fit there, otherwise
    the factor is retired and the next one tried.
    """
    ld = st.layered
    order_types = [t for t in census.ordering if plan.mu.get(t)]
    if not order_types:
        st.maps[i] = {}
        return {}
    sigma = len(order_types)
    v_ci = census.total_vertices
    if not fit_holds(v_ci, sigma, ld.m, plan.eta, ld.N):
        lhs = v_ci + sigma * ld.m + plan.eta * ld.N
        st.fit_violations.append((i, lhs))
        if strict_fit:
            raise FitViolation(i, lhs, ld.N)
    while True:
        if st.cursor >= ld.top.n_factors:
            raise OutOfFactors(i, ld.top.n_factors)
        routes = _route(st, st.cursor, order_types, plan)
        if routes is not None:
            break
        st.advance()
    j = st.cursor
    st.graph_factor[i] = j
    if j not in st.used_factors:
        st.used_factors.append(j)
    fmap = {}
    for t, chunk, b in routes:
        kst = ld.state(j, b)
        f = kst.current.get(t)
        if f is None or f in kst.full_factors:
            f = reserve_factor(ld, (j, b), t)
            if f is FULL:  # cannot happen after _route, kept as a guard
                raise RuntimeError("routing chose a K_m without capacity")
        k = kst.cursor[f]
        placements = ld.matching(j, b, f, k, t)
        if len(chunk) > len(placements):
            raise RuntimeError("chunk larger than its S-matching")
        members = census.members[t]
        for slot, pos_in_type in enumerate(chunk):
            comp = members[pos_in_type]
            pos = census.labelings[t][pos_in_type]
            hosts = placements[slot]
            for a, bb in t.edges:
                prev = st.edges.mark(hosts[a], hosts[bb], i)
                if prev != -1:
                    raise RuntimeError(f"edge {hosts[a], hosts[bb]} reused")
            labels = components[comp] if components is not None else None
            for v_local, p in enumerate(pos):
                key = labels[v_local] if labels is not None else (comp, v_local)
                fmap[key] = hosts[p]
            st.placements.append(Placement(i, comp, t, (j, b), f, k, slot, tuple(hosts)))
        kst.used_edges += len(chunk) * t.n_edges
        kst.spent_edges += len(placements) * t.n_edges
        st.consumed.append(((j, b), f, k, t, len(chunk), len(placements)))
        kst.cursor[f] = k + 1
        if kst.cursor[f] >= ld.n_matchings(t):
            kst.full_factors.add(f)
            kst.current.pop(t, None)
            free = [g for g in range(ld.n_middle_factors) if g not in kst.reserved]
            if not free:
                kst.full = True
                if st.advance_policy == "eager":
                    ld.factor_full[j] = True
    st.maps[i] = fmap
    if st.advance_policy == "eager" and ld.factor_full[j]:
        st.advance()
    return fmap


# -- waste accounting -----------------------------------------------------------


@dataclass
class WasteReport:
    """Unused edges by category.

    ``e1``/``e2`` count waste inside retired K_m-factors (the cursor has moved
    past them); ``e0`` is open capacity in the current and untouched factors.
    """

    v1: int  # vertices of unfilled placements in consumed matchings
    v2: int  # K_m vertices not covered by consumed matchings
    e1: int  # retired factors: edges of K_l-factors never reserved
    e2: int  # retired factors: unused edges inside reserved K_l-factors
    e0: int  # open factors: unused edges
    used_edges: int
    total_edges: int
    retired_factors: int
    bound: Fraction  # 2 eta times the edges of the retired factors
    bound_applies: bool

    @property
    def unused_edges(self) -> int:
        return self.e0 + self.e1 + self.e2

    @property
    def within_bound(self) -> bool:
        return self.e1 + self.e2 <= self.bound

    def to_json(self) -> dict:
        return {
            "V1": self.v1,
            "V2": self.v2,
            "E0": self.e0,
            "E1": self.e1,
            "E2": self.e2,
            "used_edges": self.used_edges,
            "unused_edges": self.unused_edges,
            "retired_factors": self.retired_factors,
            "bound_2eta": float(self.bound),
            "bound_applies": self.bound_applies,
        }


def waste_inequality(sigma: int, l: int, m: int, eta, delta_max: int) -> bool:
    """``sigma (l-1)/(m-1) + eta + Delta/(m-1) < 2 eta``."""
    eta = as_fraction(eta)
    if m < 2:
        return False
    return Fraction(sigma * (l - 1), m - 1) + eta + Fraction(delta_max, m - 1) < 2 * eta


def waste_report(st: AssignmentState, sigma: int | None = None, delta_max: int | None = None) -> WasteReport:
    """Waste by category; ``e0 + e1 + e2`` equals the unused edges of ``K_N`` exactly.

    The 2-eta bound is asserted only when ``sigma`` and ``delta_max`` are given
    and the parameter inequality holds for them.
    """
    ld = st.layered
    v1 = v2 = 0
    for _km, _f, _k, t, n_used, n_pl in st.consumed:
        v1 += (n_pl - n_used) * t.order
        v2 += ld.m - n_pl * t.order
    per_lfactor = ld.factor_edges()
    per_mfactor = ld.N * (ld.m - 1) // 2
    n_l = ld.n_middle_factors
    retired = min(st.cursor, ld.top.n_factors)
    e1 = e2 = 0
    for (j, b), kst in ld.states.items():
        if j < retired:
            e2 += len(kst.reserved) * per_lfactor - kst.used_edges
            e1 += (n_l - len(kst.reserved)) * per_lfactor
    untouched = ld.top.blocks_per_factor * retired - sum(1 for (j, _b) in ld.states if j < retired)
    e1 += untouched * n_l * per_lfactor
    total = math.comb(ld.N, 2)
    used = st.edges.count_used()
    retired_used = sum(kst.used_edges for (j, _b), kst in ld.states.items() if j < retired)
    e0 = (total - retired * per_mfactor) - (used - retired_used)
    if e0 + e1 + e2 != total - used:
        raise AssertionError("waste ledger does not match the edge table")
    bound = 2 * as_fraction(ld.eta_target) * retired * per_mfactor
    applies = (
        sigma is not None
        and delta_max is not None
        and waste_inequality(sigma, ld.l, ld.m, ld.eta_target, delta_max)
    )
    rep = WasteReport(v1, v2, e1, e2, e0, used, total, retired, bound, applies)
    if applies and not rep.within_bound:
        raise AssertionError("retired-factor waste exceeds 2 eta of their edges although the parameter inequality holds")
    return rep
