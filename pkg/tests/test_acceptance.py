"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances."""

import math
import time
from fractions import Fraction

import numpy as np

from graphpack.assignment import AssignmentState, assign_component_graph, chunk_capacity, plan_chunks
from graphpack.balancing import balance, compute_profile
from graphpack.designs import EtaNotReached, LayeredDesign, eta_factorize, resolvable_decomposition
from graphpack.embedding import embed_separators, make_partition
from graphpack.graph import GraphSequence, PackingMap, complete_graph, path_graph, verify_packing
from graphpack.instances import generate_instance, random_tree
from graphpack.isotypes import TypeCensus, canonicalize
from graphpack.oracle import BudgetExhausted, Unsat, brute_force_pack, tree_sequences, verify_design
from graphpack.pipeline import RunConfig, asymptotic_constants, run_pipeline
from graphpack.separation import SeparatorConfig, iterated_separator_bound, separate

from conftest import component_census, min_chunks_dp, report


def verdict(k, ok, detail):
    report(f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


# 1 ---------------------------------------------------------------------------


def test_1_end_to_end_soundness():
    n, runs = 60, 100
    successes = verified = within = 0
    worst_time = 0.0
    min_fill = 1.0
    for seed in range(runs):
        seq = generate_instance("random-trees", n, 3, seed=seed)
        fill = sum(g.n_edges for g in seq.graphs) / math.comb(n, 2)
        min_fill = min(min_fill, fill)
        t0 = time.perf_counter()
        res = run_pipeline(RunConfig(seed=seed), seq)
        worst_time = max(worst_time, time.perf_counter() - t0)
        if res.ok:
            successes += 1
            verified += verify_packing(seq, res.packing, res.N).passed
            within += res.N <= 1.8 * n
    ok = (
        verified == successes
        and within >= 0.9 * runs
        and worst_time <= 60
        and min_fill >= 0.85
    )
    assert verdict(
        1, ok,
        f"{successes}/{runs} succeeded, {verified} verified, {within} with N <= {1.8 * n:g}, "
        f"slowest {worst_time:.2f} s, min fill {min_fill:.3f}",
    )


# 2 ---------------------------------------------------------------------------


def _recount(d):
    counts = {}
    for factor in d.factors:
        for block in factor:
            for a in range(len(block)):
                for b in range(a + 1, len(block)):
                    e = frozenset((block[a], block[b]))
                    counts[e] = counts.get(e, 0) + 1
    return counts


def test_2_design_correctness():
    problems = []
    for N in range(4, 21, 2):
        d = resolvable_decomposition(N, 2)
        counts = _recount(d)
        if d.n_factors != N - 1 or len(counts) != math.comb(N, 2) or set(counts.values()) != {1}:
            problems.append(f"N={N}")
        if not verify_design(d).passed:
            problems.append(f"verify N={N}")
    for N, m in [(9, 3), (25, 5)]:
        d = resolvable_decomposition(N, m)
        counts = _recount(d)
        rep = verify_design(d)
        if not rep.passed or len(counts) != math.comb(N, 2) or set(counts.values()) != {1}:
            problems.append(f"({N},{m})")
        if d.n_factors != (N - 1) // (m - 1):
            problems.append(f"factor count ({N},{m})")
    assert verdict(2, not problems, "all decompositions exact" if not problems else f"failed: {problems}")


# 3 ---------------------------------------------------------------------------


def _raw_clauses(f, eta):
    """Clause (i) and (ii) recomputed from the raw placements."""
    l, v = f.host_order, f.pattern.order
    seen = set()
    for mt in f.matchings:
        verts = [x for pl in mt for x in pl]
        if len(verts) != len(set(verts)):
            return False
        for pl in mt:
            for a, b in f.pattern.edges:
                e = frozenset((pl[a], pl[b]))
                if e in seen:
                    return False
                seen.add(e)
    clause_i = all(len(mt) * v >= (1 - eta) * l for mt in f.matchings)
    clause_ii = math.comb(l, 2) - len(seen) <= eta * math.comb(l, 2)
    return clause_i and clause_ii


def test_3_eta_certification():
    eta = Fraction(1, 10)
    patterns = {"K2": complete_graph(2), "P3": path_graph(3), "K3": complete_graph(3)}
    cells = {}
    for name, g in patterns.items():
        t = canonicalize(g, ())
        for l in (12, 15, 21):
            good = 0
            for seed in range(100):
                try:
                    f = eta_factorize(l, t, eta, rng_seed=seed)
                except EtaNotReached:
                    continue
                good += f.eta_achieved <= eta and _raw_clauses(f, eta)
            cells[(name, l)] = good
    bad = {k: v for k, v in cells.items() if v < 95}
    detail = ", ".join(f"{k[0]}/l={k[1]}: {v}" for k, v in sorted(cells.items()))
    assert verdict(3, not bad, detail)


# 4 ---------------------------------------------------------------------------


def _census_of(t, nu):
    return TypeCensus({t: nu} if nu else {}, [t] if nu else [], {t: list(range(nu))}, {t: [tuple(range(t.order))] * nu})


def test_4_chunk_formula():
    types = {v: canonicalize(path_graph(v), ()) for v in range(2, 7)}
    points = formula_mismatch = enumerator_mismatch = integral_mismatch = feasible_formula = 0
    example = None
    for eta in (Fraction(0), Fraction(1, 8), Fraction(1, 4)):
        for v, t in types.items():
            for m in range(1, 61):
                if chunk_capacity(v, m, eta) < 1:
                    continue
                for nu in range(0, 51):
                    points += 1
                    got = plan_chunks(_census_of(t, nu), m, eta).total_chunks()
                    formula = math.ceil(Fraction(nu * v) / ((1 - eta) * m))
                    if got != min_chunks_dp(nu, v, m, eta):
                        enumerator_mismatch += 1
                    if got != formula:
                        formula_mismatch += 1
                        example = example or (nu, v, m, str(eta), got, formula)
                        if ((1 - eta) * m / v).denominator == 1:
                            integral_mismatch += 1
                        # could the closed-form count hold all nu components at all?
                        if formula * chunk_capacity(v, m, eta) >= nu:
                            feasible_formula += 1
    ok = formula_mismatch == 0 and enumerator_mismatch == 0
    detail = (
        f"{points} grid points; enumerator disagrees at {enumerator_mismatch}; "
        f"closed form disagrees at {formula_mismatch}, {integral_mismatch} of them at integral capacity, "
        f"{feasible_formula} where the closed-form count of chunks could hold every component"
    )
    if example:
        nu, v, m, eta, got, formula = example
        detail += f", e.g. nu={nu} v={v} m={m} eta={eta}: minimum {got} vs closed form {formula}"
    verdict(4, ok, detail)
    assert enumerator_mismatch == 0
    assert ok, detail


# 5 ---------------------------------------------------------------------------


def _boundary_instance(seed, n, n_x, xi):
    """Paths separated into K_2's, added until the boundary total would exceed xi n^2 / 2."""
    rng = np.random.default_rng(seed)
    st = AssignmentState(LayeredDesign(n_x, 2, 2, 0, seed=seed))
    budget = xi * n * n / 2
    total = i = 0
    while True:
        g = path_graph(int(rng.integers(30, 200)))
        sep = separate(g, Fraction(999, 1000), 2, enforce_budget=False)
        b = len(sep.boundary(g))
        if total + b > budget:
            break
        cen, comps = component_census(g, sep.separator, 2)
        cp = plan_chunks(cen, 2, 0)
        assign_component_graph(st, i, cen, cp, comps)
        total += b
        i += 1
    return st, total


def test_5_balancing():
    n, delta_max = 600, 2
    xi = asymptotic_constants(1, delta_max)["xi"]
    n_x = 608  # smallest even order in [(1 + xi/2) n, (1 + xi) n]
    reached = conservation = 0
    worst = 0
    for seed in range(100):
        st, total = _boundary_instance(seed, n, n_x, xi)
        assert total <= xi * n * n / 2
        prof = compute_profile(st)
        h = balance(st, xi, n, seed=seed, max_attempts=64, strict=False)
        moved = compute_profile(st, h.hosts)
        lhs, rhs = prof.conservation()
        lhs2, rhs2 = moved.conservation()
        conservation += lhs == rhs == total and lhs2 == rhs2 == total
        reached += h.reached and h.attempts <= 64
        worst = max(worst, h.max_degree)
    ok = reached >= 95 and conservation == 100
    assert verdict(
        5, ok,
        f"bound xi n = {float(xi * n):.2f} met on {reached}/100 seeds, worst max degree {worst}, "
        f"conservation exact on {conservation}/100",
    )


# 6 ---------------------------------------------------------------------------


def _hamiltonian_paths(N):
    """Walecki zigzag paths decomposing K_N, N even."""
    k = N // 2
    out = []
    for i in range(k):
        seq = [i]
        for step in range(1, k):
            seq += [(i + step) % N, (i - step) % N]
        seq.append((i + k) % N)
        out.append(seq)
    return out


def test_6_separator_embedding_regime():
    n, delta_max = 600, 2
    c = asymptotic_constants(1, delta_max)
    xi, delta = c["xi"], c["delta"]
    n_x = 608
    n_y = math.floor((1 - xi) * n)
    cap = math.ceil(3 * delta * n * n / n_y)
    paths = _hamiltonian_paths(n_x)
    worst_ratio, worst_usage, failures, steps = 1.0, 0, 0, 0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        relabel = rng.permutation(n_x)
        graphs, seps, h = [], [], {}
        edges = 0
        for i, hp in enumerate(paths[:270]):
            k = int(rng.integers(n // 2, n + 1))
            g = path_graph(k)
            gap = math.floor(1 / delta)  # every gap-th vertex, so |U| <= delta v
            off = int(rng.integers(0, gap))
            sep = [v for v in range(off, k, gap + 1)]
            if len(sep) > delta * k:
                sep = sep[:-1]
            seps.append(sep)
            graphs.append(g)
            h[i] = {v: int(relabel[hp[v]]) for v in range(k) if v not in set(sep)}
            edges += g.n_edges
        table_part = make_partition(n_x, n_y, None, delta, n)
        for i, g in enumerate(graphs):
            for a, b in g.edges:
                if a in h[i] and b in h[i]:
                    assert table_part.edges.mark(h[i][a], h[i][b], i) == -1
        try:
            full, stats = embed_separators(graphs, seps, h, table_part, strict=False, keep_trace=True)
        except Exception:
            failures += 1
            continue
        steps += stats.steps
        for _i, _u, nc, _sizes in stats.trace:
            worst_ratio = min(worst_ratio, nc / n_y)
        worst_usage = max(worst_usage, stats.max_usage)
        seq = GraphSequence(tuple(graphs), n, delta_max)
        assert verify_packing(seq, PackingMap([full[i] for i in range(len(graphs))], n_x + n_y), n_x + n_y).passed
    ok = failures == 0 and worst_ratio > 0.5 and worst_usage <= cap
    assert verdict(
        6, ok,
        f"{steps} steps, min |Y_u|/|Y| = {worst_ratio:.3f}, max usage {worst_usage} <= {cap}, "
        f"NoCandidate events {failures}",
    )


# 7 ---------------------------------------------------------------------------


def test_7_oracle_suite():
    t0 = time.perf_counter()
    counts, sat = {}, {}
    for n in range(1, 7):
        counts[n] = sat[n] = 0
        for trees in tree_sequences(n):
            counts[n] += 1
            res = brute_force_pack(GraphSequence(tuple(trees), n, max(n - 1, 1)), n)
            sat[n] += not isinstance(res, (Unsat, BudgetExhausted))
    elapsed = time.perf_counter() - t0
    ok = all(sat[n] == counts[n] for n in counts) and elapsed <= 600
    detail = ", ".join(f"n={n}: {sat[n]}/{counts[n]}" for n in counts)
    assert verdict(7, ok, f"{detail}; {elapsed:.1f} s")


# 8 ---------------------------------------------------------------------------


def test_8_separation_bounds():
    rng = np.random.default_rng(2024)
    passed = 0
    worst = 0.0
    for _ in range(100):
        g = random_tree(int(rng.integers(2, 201)), 4, rng)
        sep = separate(g, Fraction(999, 1000), 16, SeparatorConfig(strategy="tree-centroid"), enforce_budget=False)
        rounds = max(1, len(sep.rounds))
        bound = iterated_separator_bound(g.n_vertices, 1, rounds)
        sizes_ok = all(2 <= len(c) <= 16 for c in sep.components)
        structure_ok = [p for p in sep.check(g) if not p.startswith("|U|")] == []
        if len(sep.separator) <= bound and sizes_ok and structure_ok:
            passed += 1
        worst = max(worst, len(sep.separator) / bound)
    assert verdict(8, passed == 100, f"{passed}/100 trees, largest |U|/bound = {worst:.3f}")
