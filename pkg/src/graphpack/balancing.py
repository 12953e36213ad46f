"""Balancing boundary degrees by permuting blocks within factors and vertices
within blocks; sampled and certified rather than argued probabilistically."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .assignment import AssignmentState
from .separation import as_fraction


class BalancednessNotReached(RuntimeError):
    def __init__(self, best: int, attempts: int, bound):
        self.best, self.attempts = best, attempts
        super().__init__(f"max boundary degree {best} > {float(bound):.2f} after {attempts} attempts")


@dataclass(frozen=True)
class KmLabel:
    """Sorted relative boundary degrees of the ``m`` vertices of one ``K_m``."""

    degrees: tuple

    def __post_init__(self):
        if list(self.degrees) != sorted(self.degrees):
            raise ValueError("label must be non-decreasing")

    @property
    def m(self) -> int:
        return len(self.degrees)

    @property
    def mass(self) -> int:
        return sum(self.degrees)

    @property
    def beta(self) -> Fraction:
        return Fraction(self.mass, self.m)


def relative_degrees(st: AssignmentState) -> dict:
    """``{factor j: int array (blocks, m)}`` of boundary preimages per block slot."""
    ld = st.layered
    slot_of = {}
    out = {}
    for j in st.used_factors:
        out[j] = np.zeros((ld.top.blocks_per_factor, ld.m), dtype=np.int64)
    for pl in st.placements:
        j, b = pl.km
        key = (j, b)
        if key not in slot_of:
            slot_of[key] = {x: k for k, x in enumerate(ld.block(j, b))}
        pos = slot_of[key]
        for p in pl.s_type.boundary:
            out[j][b, pos[pl.hosts[p]]] += 1
    return out


@dataclass
class BalanceProfile:
    """Label statistics and boundary degrees of a (possibly permuted) packing."""

    m: int
    N: int
    eta: Fraction
    alpha_j: dict  # factor -> {label: count}
    alpha: dict  # label -> count over all factors
    incidence: dict  # label -> int array over host vertices (K_m's with that label containing v)
    degree: np.ndarray  # d(v)
    relative: dict  # factor -> (blocks, m) array of d(v, K_m) in block slot order
    threshold: Fraction
    total_boundary: int

    def is_common(self, label: KmLabel) -> bool:
        return self.alpha.get(label, 0) >= self.threshold

    @property
    def rare_km_count(self) -> int:
        return sum(c for a, c in self.alpha.items() if not self.is_common(a))

    @property
    def km_count(self) -> int:
        return sum(self.alpha.values())

    def conservation(self) -> tuple[int, int]:
        lhs = sum(self.m * a.beta * c for a, c in self.alpha.items())
        return int(lhs), self.total_boundary

    def check(self) -> list[str]:
        problems = []
        per_factor = self.N // self.m
        for j, counts in self.alpha_j.items():
            if sum(counts.values()) != per_factor:
                problems.append(f"factor {j}: label counts sum to {sum(counts.values())} != N/m")
        lhs, rhs = self.conservation()
        if lhs != rhs:
            problems.append(f"sum m beta alpha = {lhs} != boundary total {rhs}")
        if int(self.degree.sum()) != self.total_boundary:
            problems.append("vertex boundary degrees do not sum to the boundary total")
        return problems


def common_threshold(eta, N: int, m: int) -> Fraction:
    """``eta / 2^m * N(N-1) / (m(m-1))``."""
    return as_fraction(eta) / 2**m * Fraction(N * (N - 1), m * (m - 1))


def compute_profile(st: AssignmentState, hosts: dict | None = None) -> BalanceProfile:
    """Profile of the preliminary packing, or of a permuted one given ``hosts``.

    ``hosts[j]`` is the (blocks, m) array of host vertices occupied by the
    contents of block ``b``, slot ``k`` of factor ``j``.
    """
    ld = st.layered
    rel = relative_degrees(st)
    N, m = ld.N, ld.m
    degree = np.zeros(N, dtype=np.int64)
    alpha_j: dict = {}
    alpha: dict = {}
    incidence: dict = {}
    zero = KmLabel((0,) * m)
    for j in range(ld.top.n_factors):
        H = hosts[j] if hosts is not None and j in hosts else np.asarray(ld.top.factors[j])
        R = rel.get(j)
        counts: dict = {}
        if R is None:
            counts[zero] = ld.top.blocks_per_factor
        else:
            np.add.at(degree, H.ravel(), R.ravel())
            for b in range(R.shape[0]):
                lab = KmLabel(tuple(sorted(int(x) for x in R[b])))
                counts[lab] = counts.get(lab, 0) + 1
                if lab != zero:
                    arr = incidence.setdefault(lab, np.zeros(N, dtype=np.int64))
                    arr[H[b]] += 1
        alpha_j[j] = counts
        for a, c in counts.items():
            alpha[a] = alpha.get(a, 0) + c
    total = sum(int(R.sum()) for R in rel.values())
    prof = BalanceProfile(
        m, N, as_fraction(ld.eta_target), alpha_j, alpha, incidence, degree, rel,
        common_threshold(ld.eta_target, N, m), total,
    )
    problems = prof.check()
    if problems:
        raise AssertionError("; ".join(problems))
    return prof


# -- permutations -------------------------------------------------------------


@dataclass
class BalanceResult:
    maps: dict  # graph -> {vertex: host}
    hosts: dict  # factor -> (blocks, m) permuted host array
    degree: np.ndarray
    attempts: int
    max_degree: int
    bound: Fraction
    reached: bool
    history: list = field(default_factory=list)


def sample_hosts(ld, factors, rng) -> dict:
    """Joint sample of a block permutation per factor and a vertex permutation per block."""
    out = {}
    m = ld.m
    for j in factors:
        H = np.asarray(ld.top.factors[j])
        perm_blocks = rng.permutation(H.shape[0])
        H = H[perm_blocks]
        idx = np.argsort(rng.random(H.shape), axis=1)
        out[j] = np.take_along_axis(H, idx, axis=1) if m > 1 else H
    return out


def identity_hosts(ld, factors) -> dict:
    return {j: np.asarray(ld.top.factors[j]) for j in factors}


def boundary_degrees(rel: dict, hosts: dict, N: int) -> np.ndarray:
    d = np.zeros(N, dtype=np.float64)
    for j, R in rel.items():
        d += np.bincount(hosts[j].ravel(), weights=R.ravel(), minlength=N)
    return d.astype(np.int64)


def apply_hosts(st: AssignmentState, hosts: dict) -> dict:
    """Compose the preliminary maps with the sampled permutations."""
    ld = st.layered
    moved = {}
    for j, H in hosts.items():
        base = np.asarray(ld.top.factors[j])
        table = np.empty(ld.N, dtype=np.int64)
        table[base.ravel()] = H.ravel()
        moved[j] = table
    out = {}
    for i, mp in st.maps.items():
        j = st.graph_factor.get(i)
        if j is None:
            out[i] = dict(mp)
            continue
        table = moved[j]
        out[i] = {v: int(table[h]) for v, h in mp.items()}
    return out


def check_permuted(st: AssignmentState, hosts: dict) -> list[str]:
    """Edge-disjointness and per-graph injectivity of the permuted placements."""
    ld = st.layered
    tables = {}
    for j, H in hosts.items():
        base = np.asarray(ld.top.factors[j])
        t = np.empty(ld.N, dtype=np.int64)
        t[base.ravel()] = H.ravel()
        tables[j] = t
    seen = {}
    per_graph = {}
    problems = []
    for pl in st.placements:
        t = tables[pl.km[0]]
        hs = [int(t[x]) for x in pl.hosts]
        used = per_graph.setdefault(pl.graph, set())
        if used & set(hs):
            problems.append(f"graph {pl.graph}: vertex collision after permutation")
        used.update(hs)
        for a, b in pl.s_type.edges:
            e = (min(hs[a], hs[b]), max(hs[a], hs[b]))
            if e in seen:
                problems.append(f"edge {e} reused by graphs {seen[e]} and {pl.graph}")
            seen[e] = pl.graph
    return problems


def balance(
    st: AssignmentState,
    xi,
    n: int,
    seed: int = 0,
    max_attempts: int = 64,
    strict: bool = True,
    check: bool = True,
) -> BalanceResult:
    """Resample permutations until every vertex has ``d(v) <= xi n``.

    Attempt ``a`` draws from a generator seeded by ``(seed, a)``. The first
    attempt meeting the bound wins. Otherwise strict mode raises
    BalancednessNotReached and best-effort mode keeps the attempt with the
    smallest maximum.
    """
    ld = st.layered
    bound = as_fraction(xi) * n
    rel = relative_degrees(st)
    factors = sorted(rel)
    best = None
    history = []
    attempts = 0
    for a in range(max(1, max_attempts)):
        attempts = a + 1
        rng = np.random.default_rng(np.random.SeedSequence([int(seed) % 2**63, a]))
        hosts = sample_hosts(ld, factors, rng)
        d = boundary_degrees(rel, hosts, ld.N)
        mx = int(d.max()) if d.size else 0
        history.append(mx)
        if best is None or mx < best[0]:
            best = (mx, hosts, d)
        if mx <= bound:
            break
    mx, hosts, d = best
    reached = mx <= bound
    if not reached and strict:
        raise BalancednessNotReached(mx, attempts, bound)
    if check:
        problems = check_permuted(st, hosts)
        if problems:
            raise AssertionError(problems[0])
    return BalanceResult(apply_hosts(st, hosts), hosts, d, attempts, mx, bound, reached, history)


@dataclass
class Certificate:
    max_boundary_degree: int
    xi_n: float
    attempts: int
    rare_label_fraction: float
    common_term: float
    rare_term: float
    passed: bool

    @property
    def bound(self) -> float:
        return self.common_term + self.rare_term

    def to_json(self) -> dict:
        return {
            "max_boundary_degree": self.max_boundary_degree,
            "xi_n": self.xi_n,
            "attempts": self.attempts,
            "rare_label_fraction": self.rare_label_fraction,
            "common_term": self.common_term,
            "rare_term": self.rare_term,
            "passed": self.passed,
        }


def balance_certificate(h: BalanceResult, profile: BalanceProfile, xi, n: int) -> Certificate:
    """Measured maximum against ``xi n`` plus the two-term analytic bound.

    Common term: ``(1+eta)^2 / N`` times the boundary mass carried by common
    labels. Rare term: ``2 eta (N-1)``.
    """
    eta = profile.eta
    N = profile.N
    common_mass = sum(profile.m * a.beta * c for a, c in profile.alpha.items() if profile.is_common(a))
    common_term = (1 + eta) ** 2 * Fraction(common_mass) / N
    rare_term = 2 * eta * (N - 1)
    km = profile.km_count
    measured = int(h.degree.max()) if h.degree.size else 0
    xi_n = as_fraction(xi) * n
    return Certificate(
        measured,
        float(xi_n),
        h.attempts,
        profile.rare_km_count / km if km else 0.0,
        float(common_term),
        float(rare_term),
        measured <= xi_n,
    )
