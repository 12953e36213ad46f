"""Resolvable clique decompositions, near-resolvable pattern factorizations and
the three-layer usage state built from them."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .isotypes import IsoType
from .separation import as_fraction


class UnsupportedParameters(ValueError):
    def __init__(self, N: int, m: int, nearest: int | None):
        self.N, self.m, self.nearest = N, m, nearest
        hint = f"; nearest supported N >= {N} is {nearest}" if nearest else ""
        super().__init__(f"no resolvable K_{m}-decomposition of K_{N} available{hint}")


class EtaNotReached(Exception):
    def __init__(self, eta_achieved: Fraction, best: "EtaFactorization"):
        self.eta_achieved = eta_achieved
        self.best = best
        super().__init__(f"best factorization reaches eta = {float(eta_achieved):.4f}")


# -- finite fields ------------------------------------------------------------


def prime_power(q: int) -> tuple[int, int] | None:
    """``(p, k)`` with ``q = p**k`` for prime ``p``, else None."""
    if q < 2:
        return None
    p = next(d for d in range(2, q + 1) if q % d == 0)
    k, r = 0, q
    while r % p == 0:
        r //= p
        k += 1
    return (p, k) if r == 1 else None


class GF:
    """Arithmetic tables of the field with ``q = p**k`` elements.

    Elements are integers whose base-``p`` digits are polynomial coefficients.
    """

    def __init__(self, q: int):
        pk = prime_power(q)
        if pk is None:
            raise ValueError(f"{q} is not a prime power")
        self.q = q
        self.p, self.k = pk
        p, k = pk
        digits = [[(x // p**i) % p for i in range(k)] for x in range(q)]
        self.add = np.array(
            [[sum(((da + db) % p) * p**i for i, (da, db) in enumerate(zip(digits[a], digits[b])))
              for b in range(q)] for a in range(q)], dtype=np.int64)
        modulus = self._irreducible() if k > 1 else None
        mul = np.zeros((q, q), dtype=np.int64)
        for a in range(q):
            for b in range(q):
                mul[a, b] = self._polymul(digits[a], digits[b], modulus)
        self.mul = mul

    def _polymul(self, a, b, modulus) -> int:
        p, k = self.p, self.k
        prod = [0] * (2 * k - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                prod[i + j] = (prod[i + j] + x * y) % p
        if modulus is not None:
            for d in range(len(prod) - 1, k - 1, -1):
                c = prod[d]
                if c:
                    for i in range(k + 1):
                        prod[d - k + i] = (prod[d - k + i] - c * modulus[i]) % p
        return sum(prod[i] * p**i for i in range(k))

    def _irreducible(self) -> list[int]:
        p, k = self.p, self.k
        for tail in product(range(p), repeat=k):
            poly = list(tail) + [1]  # monic, low degree first
            if poly[0] == 0:
                continue
            if not any(self._has_factor(poly, d) for d in range(1, k // 2 + 1)):
                return poly
        raise RuntimeError("no irreducible polynomial found")

    def _has_factor(self, poly, d) -> bool:
        p = self.p
        for tail in product(range(p), repeat=d):
            div = list(tail) + [1]
            rem = list(poly)
            for i in range(len(rem) - 1, d - 1, -1):
                c = rem[i]
                if c:
                    for j in range(d + 1):
                        rem[i - d + j] = (rem[i - d + j] - c * div[j]) % p
            if not any(rem[:d]):
                return True
        return False


# -- resolvable decompositions ------------------------------------------------


@dataclass(frozen=True)
class ResolvableCliqueDecomposition:
    host_order: int
    block_order: int
    factors: tuple  # factors[j][b] = sorted tuple of host vertices

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def blocks_per_factor(self) -> int:
        return self.host_order // self.block_order

    def to_json(self) -> dict:
        return {
            "N": self.host_order,
            "m": self.block_order,
            "factors": [[list(b) for b in f] for f in self.factors],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ResolvableCliqueDecomposition":
        return cls(
            int(obj["N"]),
            int(obj["m"]),
            tuple(tuple(tuple(b) for b in f) for f in obj["factors"]),
        )


def _canon_factors(factors) -> tuple:
    return tuple(tuple(sorted(tuple(sorted(b)) for b in f)) for f in factors)


def round_robin(N: int) -> list[list[tuple[int, int]]]:
    """Circle-method 1-factorization of ``K_N`` (``N`` even)."""
    if N % 2:
        raise ValueError("round robin needs an even order")
    rounds = []
    rest = list(range(1, N))
    for r in range(N - 1):
        order = [0] + rest[r:] + rest[:r]
        rounds.append([tuple(sorted((order[i], order[N - 1 - i]))) for i in range(N // 2)])
    return rounds


def affine_geometry(q: int, k: int) -> list[list[tuple[int, ...]]]:
    """Parallel classes of lines of ``AG(k, q)``; points are base-``q`` integers."""
    F = GF(q)
    points = list(product(range(q), repeat=k))
    index = {pt: i for i, pt in enumerate(points)}
    directions = [d for d in points if any(d) and d[next(i for i, x in enumerate(d) if x)] == 1]
    classes = []
    for d in directions:
        seen = set()
        lines = []
        for pt in points:
            if pt in seen:
                continue
            line = []
            for t in range(q):
                img = tuple(int(F.add[pt[i], F.mul[t, d[i]]]) for i in range(k))
                line.append(index[img])
                seen.add(img)
            lines.append(tuple(sorted(line)))
        classes.append(lines)
    return classes


def _rotational_kts_base(v: int, deadline: float) -> list[tuple[int, int, int]] | None:
    """Base blocks of a 1-rotational Kirkman triple system of order ``v``.

    Points are ``Z_{v-1}`` plus infinity. The base parallel class is
    ``{inf, 0, r}`` together with triples ``B_1..B_t`` and their translates by
    ``r = (v-1)/2``; their differences must cover ``Z_{v-1} - {0, r}`` exactly once.
    """
    M = v - 1
    r = M // 2
    t = (v - 3) // 6
    used_pts = [False] * M
    used_pts[0] = used_pts[r] = True
    used_diff = [False] * M
    used_diff[0] = used_diff[r] = True
    chosen = []

    def diffs(a, b, c):
        out = []
        for x, y in ((a, b), (a, c), (b, c)):
            out.append((y - x) % M)
            out.append((x - y) % M)
        return out

    def rec() -> bool:
        if time.monotonic() > deadline:
            raise TimeoutError
        if len(chosen) == t:
            return True
        x = next(i for i in range(M) if not used_pts[i])
        cand = [y for y in range(x + 1, M) if not used_pts[y] and y != (x + r) % M]
        for ai, y in enumerate(cand):
            for z in cand[ai + 1:]:
                if z == (y + r) % M:
                    continue
                trip = (x, y, z)
                shifted = [(p + r) % M for p in trip]
                if any(used_pts[p] for p in shifted) or len(set(trip) | set(shifted)) != 6:
                    continue
                ds = diffs(*trip)
                if len(set(ds)) != 6 or any(used_diff[d] for d in ds):
                    continue
                for p in trip + tuple(shifted):
                    used_pts[p] = True
                for d in ds:
                    used_diff[d] = True
                chosen.append(trip)
                if rec():
                    return True
                chosen.pop()
                for p in trip + tuple(shifted):
                    used_pts[p] = False
                for d in ds:
                    used_diff[d] = False
        return False

    try:
        return list(chosen) if rec() else None
    except TimeoutError:
        return None


def _cyclic3_kts(v, deadline):
    """Kirkman triple system on ``Z_q x Z_3`` (``v = 3q``) by difference search.

    Classes: the vertical class ``{(x,0),(x,1),(x,2)}``; the ``q`` translates
    of one base class ``P``; and ``(q-3)/2`` classes, each the translates of a
    transversal block ``{(0,0),(a,1),(b,2)}``. Pure differences within a level
    and mixed differences between two levels must each be used exactly once.
    """
    q = v // 3
    nfix = (q - 3) // 2
    pure = [[False] * q for _ in range(3)]
    mixed = {(0, 1): [False] * q, (0, 2): [False] * q, (1, 2): [False] * q}
    for key in mixed:
        mixed[key][0] = True
    for j in range(3):
        pure[j][0] = True
    fixed = []
    pclass = []
    used = [False] * v
    steps = [0]

    def tick():
        steps[0] += 1
        if steps[0] % 1024 == 0 and time.monotonic() > deadline:
            raise TimeoutError

    def diffs(block):
        """Difference slots a block occupies, or None if it repeats one internally."""
        out = []
        for i in range(3):
            for k in range(i + 1, 3):
                (x1, j1), (x2, j2) = block[i], block[k]
                if j1 == j2:
                    d = (x2 - x1) % q
                    out.append(("p", j1, d))
                    out.append(("p", j1, (-d) % q))
                else:
                    if j1 > j2:
                        (x1, j1), (x2, j2) = (x2, j2), (x1, j1)
                    out.append(("m", (j1, j2), (x2 - x1) % q))
        return out if len(set(out)) == len(out) else None

    def slot(sl):
        return pure[sl[1]] if sl[0] == "p" else mixed[sl[1]]

    def free(ds):
        return all(not slot(sl)[sl[2]] for sl in ds)

    def mark(ds, val):
        for sl in ds:
            slot(sl)[sl[2]] = val

    def rec_p():
        tick()
        try:
            i = used.index(False)
        except ValueError:
            return all(all(row) for row in pure) and all(all(r) for r in mixed.values())
        pts = [k for k in range(i + 1, v) if not used[k]]
        for a, k1 in enumerate(pts):
            for k2 in pts[a + 1:]:
                block = [(i % q, i // q), (k1 % q, k1 // q), (k2 % q, k2 // q)]
                ds = diffs(block)
                if ds is None or not free(ds):
                    continue
                mark(ds, True)
                used[i] = used[k1] = used[k2] = True
                pclass.append((i, k1, k2))
                if rec_p():
                    return True
                pclass.pop()
                used[i] = used[k1] = used[k2] = False
                mark(ds, False)
        return False

    def rec_fixed(start):
        tick()
        if len(fixed) == nfix:
            return rec_p()
        for code in range(start, q * q):
            a, b = divmod(code, q)
            ds = diffs([(0, 0), (a, 1), (b, 2)])
            if ds is None or not free(ds):
                continue
            mark(ds, True)
            fixed.append((a, b))
            if rec_fixed(code + 1):
                return True
            fixed.pop()
            mark(ds, False)
        return False

    try:
        if not rec_fixed(0):
            return None
    except TimeoutError:
        return None

    def pt(x, j):
        return j * q + x % q

    classes = [[(pt(x, 0), pt(x, 1), pt(x, 2)) for x in range(q)]]
    for g in range(q):
        classes.append([tuple(sorted(pt(k % q + g, k // q) for k in blk)) for blk in pclass])
    for a, b in fixed:
        classes.append([(pt(g, 0), pt(a + g, 1), pt(b + g, 2)) for g in range(q)])
    return classes


def _exact_cover_kts(v: int, deadline: float) -> list[list[tuple[int, int, int]]] | None:
    """Kirkman triple system by exact cover (Algorithm X with smallest-column choice).

    Columns are (class, point) incidences and point pairs; rows are triples
    placed in a class. Symmetry is broken by fixing the triple through point 0
    in class ``c`` to ``{0, 2c+1, 2c+2}``.
    """
    r = (v - 1) // 2
    X: dict = {}
    Y: dict = {}
    for c in range(r):
        fixed = (0, 2 * c + 1, 2 * c + 2)
        for a in range(1, v):
            for b in range(a + 1, v):
                for d in range(b + 1, v):
                    _add_row(X, Y, (c, a, b, d), c)
        _add_row(X, Y, (c,) + fixed, c)
    # only the fixed triple may cover point 0 in each class
    for c in range(r):
        for row in list(X.get(("p", c, 0), ())):
            if row[1:] != (0, 2 * c + 1, 2 * c + 2):
                _drop_row(X, Y, row)
    solution = []
    steps = [0]

    def search() -> bool:
        if not X:
            return True
        steps[0] += 1
        if steps[0] % 512 == 0 and time.monotonic() > deadline:
            raise TimeoutError
        col = min(X, key=lambda k: len(X[k]))
        for row in list(X[col]):
            solution.append(row)
            cols = _select(X, Y, row)
            if search():
                return True
            _deselect(X, Y, row, cols)
            solution.pop()
        return False

    try:
        if not search():
            return None
    except TimeoutError:
        return None
    classes = [[] for _ in range(r)]
    for c, a, b, d in solution:
        classes[c].append((a, b, d))
    return classes


def _add_row(X, Y, row, c):
    _, a, b, d = row
    cols = [("p", c, a), ("p", c, b), ("p", c, d), ("e", a, b), ("e", a, d), ("e", b, d)]
    Y[row] = cols
    for col in cols:
        X.setdefault(col, set()).add(row)


def _drop_row(X, Y, row):
    for col in Y.pop(row):
        X[col].discard(row)


def _select(X, Y, row):
    cols = []
    for j in Y[row]:
        for i in X[j]:
            for k in Y[i]:
                if k != j:
                    X[k].remove(i)
        cols.append(X.pop(j))
    return cols


def _deselect(X, Y, row, cols):
    for j in reversed(Y[row]):
        X[j] = cols.pop()
        for i in X[j]:
            for k in Y[i]:
                if k != j:
                    X[k].add(i)


def kirkman(v: int, time_budget: float = 20.0) -> list[list[tuple[int, int, int]]] | None:
    """Kirkman triple system on ``v = 3 (mod 6)`` points, or None if not found."""
    if v % 6 != 3:
        raise ValueError("Kirkman systems need v = 3 (mod 6)")
    pk = prime_power(v)
    if pk is not None and pk[0] == 3:
        return affine_geometry(3, pk[1])
    deadline = time.monotonic() + time_budget
    if v <= 15:
        return _exact_cover_kts(v, deadline)
    classes = _cyclic3_kts(v, time.monotonic() + time_budget / 2)
    if classes is not None:
        return classes
    base = _rotational_kts_base(v, deadline)
    if base is None:
        return None
    M = v - 1
    r = M // 2
    inf = M
    classes = []
    for g in range(r):
        blocks = [tuple(sorted((inf, g % M, (g + r) % M)))]
        for b in base:
            for sh in (0, r):
                blocks.append(tuple(sorted((p + g + sh) % M for p in b)))
        classes.append(blocks)
    return classes


_KIRKMAN_CACHE: dict = {}


def _is_power(N: int, m: int) -> bool:
    x = m
    while x < N:
        x *= m
    return x == N


def is_supported(N: int, m: int, search: bool = False) -> bool:
    """Whether ``(N, m)`` belongs to an implemented family.

    Kirkman orders are accepted structurally unless ``search`` is set, in
    which case the construction is actually attempted.
    """
    if m < 2 or N < m or N % m:
        return False
    if m == N or (m == 2 and N % 2 == 0):
        return True
    if prime_power(m) is not None and _is_power(N, m):
        return True
    if m == 3 and N % 6 == 3:
        return _kirkman_cached(N) is not None if search else True
    return False


def _kirkman_cached(N: int):
    if N not in _KIRKMAN_CACHE:
        _KIRKMAN_CACHE[N] = kirkman(N)
    return _KIRKMAN_CACHE[N]


def nearest_supported(N: int, m: int, limit: int = 4096) -> int | None:
    for cand in range(max(N, m), limit + 1):
        if is_supported(cand, m):
            return cand
    return None


def resolvable_decomposition(N: int, m: int) -> ResolvableCliqueDecomposition:
    """Resolvable ``K_m``-decomposition of ``K_N`` for the implemented families.

    Families: the trivial one (``m = N``), round robin (``m = 2``, ``N`` even),
    affine geometries (``m = q`` prime power, ``N = q**k``) and Kirkman triple
    systems (``m = 3``, ``N = 3 mod 6``, found by a 1-rotational search when
    ``N`` is not a power of 3).
    """
    if m < 2 or N < 2:
        raise UnsupportedParameters(N, m, None)
    factors = None
    if m == N:
        factors = [[tuple(range(N))]]
    elif m == 2 and N % 2 == 0:
        factors = round_robin(N)
    else:
        if prime_power(m) is not None and _is_power(N, m):
            k = round(math.log(N, m))
            factors = affine_geometry(m, k)
        if factors is None and m == 3 and N % 6 == 3:
            factors = _kirkman_cached(N)
    if factors is None:
        raise UnsupportedParameters(N, m, nearest_supported(N + 1, m))
    d = ResolvableCliqueDecomposition(N, m, _canon_factors(factors))
    problems = check_decomposition(d)
    if problems:
        raise AssertionError(f"construction failed its own check: {problems[:3]}")
    return d


def check_decomposition(d: ResolvableCliqueDecomposition) -> list[str]:
    """Invariant check from raw blocks (also used by the independent verifier)."""
    N, m = d.host_order, d.block_order
    problems = []
    if m < 2 or N % m:
        problems.append(f"block order {m} does not divide {N}")
    if (N - 1) % (m - 1) or d.n_factors != (N - 1) // (m - 1):
        problems.append(f"{d.n_factors} factors, expected (N-1)/(m-1) = {(N - 1) / (m - 1)}")
    cover = np.zeros((N, N), dtype=np.int64)
    for j, f in enumerate(d.factors):
        hits = np.zeros(N, dtype=np.int64)
        for b in f:
            if len(b) != m:
                problems.append(f"factor {j}: block {b} has order {len(b)} != {m}")
            for x in b:
                if not (0 <= x < N):
                    problems.append(f"factor {j}: vertex {x} out of range")
                    continue
                hits[x] += 1
            for a in range(len(b)):
                for c in range(a + 1, len(b)):
                    if 0 <= b[a] < N and 0 <= b[c] < N:
                        cover[b[a], b[c]] += 1
                        cover[b[c], b[a]] += 1
        if not np.all(hits == 1):
            bad = np.flatnonzero(hits != 1)[:5].tolist()
            problems.append(f"factor {j} is not a partition (vertices {bad})")
    iu = np.triu_indices(N, 1)
    wrong = np.flatnonzero(cover[iu] != 1)
    if wrong.size:
        e = (int(iu[0][wrong[0]]), int(iu[1][wrong[0]]))
        problems.append(f"{wrong.size} edges not covered exactly once (e.g. {e})")
    return problems


# -- (S, eta)-factorizations --------------------------------------------------


@dataclass(frozen=True)
class EtaFactorization:
    """Edge-disjoint S-matchings of ``K_l``.

    ``matchings[k]`` is a tuple of placements; a placement lists the host
    vertex of each pattern vertex. ``eta_achieved`` is the smallest eta for
    which both defining clauses hold.
    """

    host_order: int
    pattern: IsoType
    matchings: tuple
    eta_achieved: Fraction
    uncovered: int

    @property
    def t(self) -> int:
        return len(self.matchings)

    @property
    def uncovered_fraction(self) -> Fraction:
        total = math.comb(self.host_order, 2)
        return Fraction(self.uncovered, total) if total else Fraction(0)

    @property
    def min_size(self) -> int:
        return min((len(mt) for mt in self.matchings), default=0)

    def to_json(self) -> dict:
        return {
            "l": self.host_order,
            "pattern": self.pattern.to_json(),
            "matchings": [[list(p) for p in mt] for mt in self.matchings],
            "eta_achieved": str(self.eta_achieved),
        }


def achieved_eta(l: int, v: int, sizes, uncovered: int) -> Fraction:
    total = math.comb(l, 2)
    unc = Fraction(uncovered, total) if total else Fraction(0)
    if not sizes:
        return max(Fraction(1), unc)
    deficit = 1 - Fraction(min(sizes) * v, l)
    return max(deficit, unc, Fraction(0))


def _count_uncovered(l: int, pattern_edges, matchings) -> int:
    covered = set()
    for mt in matchings:
        for pl in mt:
            for a, b in pattern_edges:
                x, y = pl[a], pl[b]
                covered.add((x, y) if x < y else (y, x))
    return math.comb(l, 2) - len(covered)


class _LocalSearch:
    """Min-conflicts search for ``t`` S-matchings of size ``k`` in ``K_l``.

    Matching ``j`` is a permutation of the host vertices: the first ``k*v``
    entries form ``k`` consecutive placements, the rest is unused. The cost
    is the number of surplus uses of host edges.
    """

    def __init__(self, l, v, pattern_edges, t, k, rng):
        self.l, self.v, self.t, self.k = l, v, t, k
        self.rng = rng
        self.nbrs = [[] for _ in range(v)]
        for a, b in pattern_edges:
            self.nbrs[a].append(b)
            self.nbrs[b].append(a)
        self.perms = [list(rng.permutation(l)) for _ in range(t)]
        self.cnt = [[0] * l for _ in range(l)]
        self.cost = 0
        for j in range(t):
            for x, y in self._edges_of(j):
                self._add(x, y, 1)

    def _edges_of(self, j):
        perm, v = self.perms[j], self.v
        for p in range(self.k):
            base = p * v
            for a in range(v):
                for b in self.nbrs[a]:
                    if a < b:
                        yield perm[base + a], perm[base + b]

    def _add(self, x, y, d):
        c = self.cnt[x][y]
        if d > 0:
            if c >= 1:
                self.cost += 1
        else:
            if c >= 2:
                self.cost -= 1
        self.cnt[x][y] = self.cnt[y][x] = c + d

    def _pos_edges(self, j, positions):
        """Host edges of matching ``j`` incident to the given positions (deduplicated)."""
        perm, v, kv = self.perms[j], self.v, self.k * self.v
        seen = set()
        out = []
        for pos in positions:
            if pos >= kv:
                continue
            base, a = divmod(pos, v)
            base *= v
            for b in self.nbrs[a]:
                key = (min(pos, base + b), max(pos, base + b))
                if key not in seen:
                    seen.add(key)
                    out.append(key)
        return [(perm[p], perm[q]) for p, q in out], out

    def swap_delta(self, j, x, y) -> int:
        before = self.cost
        edges, keys = self._pos_edges(j, (x, y))
        for a, b in edges:
            self._add(a, b, -1)
        perm = self.perms[j]
        perm[x], perm[y] = perm[y], perm[x]
        for p, q in keys:
            self._add(perm[p], perm[q], 1)
        return self.cost - before

    def conflicted_position(self, j):
        perm, v, kv = self.perms[j], self.v, self.k * self.v
        cands = []
        for pos in range(kv):
            base, a = divmod(pos, v)
            base *= v
            for b in self.nbrs[a]:
                if self.cnt[perm[pos]][perm[base + b]] > 1:
                    cands.append(pos)
                    break
        return cands

    def run(self, max_steps: int, noise: float = 0.1, deadline: float | None = None) -> bool:
        rng = self.rng
        l, kv = self.l, self.k * self.v
        for step in range(max_steps):
            if self.cost == 0:
                return True
            if deadline is not None and step % 64 == 0 and time.monotonic() > deadline:
                break
            order = rng.permutation(self.t)
            for j in order:
                cands = self.conflicted_position(j)
                if cands:
                    break
            x = cands[int(rng.integers(len(cands)))]
            if rng.random() < noise:
                y = int(rng.integers(l))
                if y != x:
                    self.swap_delta(j, x, y)
                continue
            best, best_ys = None, []
            for y in range(l):
                if y == x or (y < kv and y // self.v == x // self.v and False):
                    continue
                d = self.swap_delta(j, x, y)
                self.swap_delta(j, x, y)  # undo
                if best is None or d < best:
                    best, best_ys = d, [y]
                elif d == best:
                    best_ys.append(y)
            if best_ys:
                y = best_ys[int(rng.integers(len(best_ys)))]
                self.swap_delta(j, x, y)
        return self.cost == 0

    def extract(self):
        """Drop conflicting placements, keeping first occurrences in matching order."""
        v = self.v
        taken = set()
        result = []
        for j in range(self.t):
            perm = self.perms[j]
            mt = []
            for p in range(self.k):
                pl = tuple(int(x) for x in perm[p * v:(p + 1) * v])
                es = set()
                for a in range(v):
                    for b in self.nbrs[a]:
                        if a < b:
                            x, y = pl[a], pl[b]
                            es.add((x, y) if x < y else (y, x))
                if es & taken:
                    continue
                taken |= es
                mt.append(pl)
            result.append(mt)
        return result


def _greedy_matching(l, v, nbrs_pattern, order_pattern, free_edge, rng, k_cap):
    """Randomized greedy S-matching on the free edges of ``K_l``."""
    free_vertices = [int(x) for x in rng.permutation(l)]
    available = set(free_vertices)
    placements = []

    def embed():
        # DFS embedding of the pattern along order_pattern using free edges
        assign = [-1] * v
        used = set()

        def rec(i):
            if i == v:
                return True
            a = order_pattern[i]
            opts = [x for x in free_vertices if x in available and x not in used]
            for x in opts:
                ok = True
                for b in nbrs_pattern[a]:
                    if assign[b] >= 0 and not free_edge(x, assign[b]):
                        ok = False
                        break
                if ok:
                    assign[a] = x
                    used.add(x)
                    if rec(i + 1):
                        return True
                    used.discard(x)
                    assign[a] = -1
            return False

        return tuple(assign) if rec(0) else None

    while len(placements) < k_cap and len(available) >= v:
        pl = embed()
        if pl is None:
            break
        placements.append(pl)
        available.difference_update(pl)
        rng.shuffle(free_vertices)
    return placements


def eta_factorize(
    l: int,
    s_type: IsoType,
    eta_target,
    rng_seed=None,
    restarts: int = 32,
    search_steps: int = 4000,
    time_budget: float = 5.0,
) -> EtaFactorization:
    """Near-resolvable factorization of ``K_l`` into S-matchings.

    Each restart runs randomized greedy extraction of large S-matchings. If
    the uncovered fraction is still above target, a min-conflicts local search
    looks for the smallest number of maximum-size matchings that meets the
    target, and greedy extension then mops up leftover edges. Complete
    patterns with a resolvable decomposition of ``K_l`` available use it
    directly (vertex-permuted). Restarts stop after ``time_budget`` seconds.
    The best run is returned; its eta is certified from the raw placements. Raises
    EtaNotReached (carrying the best run) when the target is missed.
    """
    eta_target = as_fraction(eta_target)
    v, e = s_type.order, s_type.n_edges
    if v > l:
        raise ValueError(f"pattern order {v} exceeds l = {l}")
    if e == 0:
        raise ValueError("pattern must have edges")
    rng = np.random.default_rng(rng_seed)
    pattern_edges = list(s_type.edges)
    nbrs = [[] for _ in range(v)]
    for a, b in pattern_edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    # BFS order of pattern vertices keeps the DFS embedding connected
    order = [0]
    for x in order:
        for y in nbrs[x]:
            if y not in order:
                order.append(y)
    order += [x for x in range(v) if x not in order]

    total = math.comb(l, 2)
    k_max = l // v
    k_min = math.ceil((1 - eta_target) * Fraction(l, v))
    k_min = max(k_min, 1)

    def build(matchings) -> EtaFactorization:
        unc = _count_uncovered(l, pattern_edges, matchings)
        eta = achieved_eta(l, v, [len(mt) for mt in matchings], unc)
        return EtaFactorization(l, s_type, tuple(tuple(mt) for mt in matchings), eta, unc)

    def greedy_extend(matchings, used):
        def free(x, y):
            return (min(x, y), max(x, y)) not in used

        while True:
            mt = _greedy_matching(l, v, nbrs, order, free, rng, k_max)
            if len(mt) < k_min or len(mt) == 0:
                return matchings
            for pl in mt:
                for a, b in pattern_edges:
                    x, y = pl[a], pl[b]
                    used.add((min(x, y), max(x, y)))
            matchings.append(mt)

    if 2 * e == v * (v - 1) and l % v == 0 and is_supported(l, v):
        try:
            d = resolvable_decomposition(l, v)
        except UnsupportedParameters:
            d = None
        if d is not None:
            perm = [int(x) for x in rng.permutation(l)]
            mats = [[tuple(perm[x] for x in blk) for blk in f] for f in d.factors]
            return build(mats)

    deadline = time.monotonic() + time_budget
    best = None
    for _ in range(max(1, restarts)):
        if best is not None and time.monotonic() > deadline:
            break
        mats = greedy_extend([], set())
        cand = build(mats)
        if cand.eta_achieved > eta_target and k_max >= k_min:
            need = math.ceil((1 - eta_target) * total / (k_max * e))
            cap = total // (k_max * e)
            if need <= cap:
                ls = _LocalSearch(l, v, pattern_edges, need, k_max, rng)
                ls.run(search_steps, deadline=deadline)
                mats = [mt for mt in ls.extract() if len(mt) >= k_min]
                used = set()
                for mt in mats:
                    for pl in mt:
                        for a, b in pattern_edges:
                            x, y = pl[a], pl[b]
                            used.add((min(x, y), max(x, y)))
                mats = greedy_extend(mats, used)
                alt = build(mats)
                if alt.eta_achieved < cand.eta_achieved:
                    cand = alt
        if best is None or cand.eta_achieved < best.eta_achieved:
            best = cand
        if best.eta_achieved <= eta_target:
            break
    if best.eta_achieved > eta_target:
        raise EtaNotReached(best.eta_achieved, best)
    return best


def check_factorization(f: EtaFactorization, eta=None) -> list[str]:
    """Re-derive both defining clauses of an (S, eta)-factorization from raw placements."""
    eta = f.eta_achieved if eta is None else as_fraction(eta)
    l, v = f.host_order, f.pattern.order
    problems = []
    seen = {}
    for j, mt in enumerate(f.matchings):
        verts = [x for pl in mt for x in pl]
        if len(set(verts)) != len(verts):
            problems.append(f"matching {j}: placements not vertex-disjoint")
        if any(not (0 <= x < l) for x in verts):
            problems.append(f"matching {j}: vertex out of range")
        for pl in mt:
            if len(pl) != v:
                problems.append(f"matching {j}: placement of wrong order")
                continue
            for a, b in f.pattern.edges:
                x, y = pl[a], pl[b]
                key = (min(x, y), max(x, y))
                if key in seen:
                    problems.append(f"edge {key} used by matchings {seen[key]} and {j}")
                seen[key] = j
        if len(mt) < (1 - eta) * Fraction(l, v):
            problems.append(f"clause (i): matching {j} has {len(mt)} < (1-eta) l/v(S)")
    unc = math.comb(l, 2) - len(seen)
    if unc > eta * math.comb(l, 2):
        problems.append(f"clause (ii): {unc} uncovered edges > eta * C(l,2)")
    if unc != f.uncovered:
        problems.append(f"stored uncovered count {f.uncovered} != recount {unc}")
    return problems


# -- three-layer usage state --------------------------------------------------


@dataclass
class KmState:
    """Usage of one ``K_m`` block: reservations, matching cursors, fullness."""

    reserved: dict = field(default_factory=dict)  # middle factor -> IsoType
    current: dict = field(default_factory=dict)  # IsoType -> middle factor
    cursor: dict = field(default_factory=dict)  # middle factor -> next matching index
    full_factors: set = field(default_factory=set)
    full: bool = False
    used_edges: int = 0
    spent_edges: int = 0


class LayeredDesign:
    """Three-layer structure: ``K_m``-factors of ``K_N``, ``K_l``-factors of each
    ``K_m`` and (S, eta)-factorizations of each ``K_l``.

    One factorization of ``K_l`` per type is computed lazily and reused in
    every ``K_l`` (vertex ids are mapped through the blocks).
    """

    def __init__(self, N: int, m: int, l: int, eta_target, seed=0, restarts: int = 32):
        self.top = resolvable_decomposition(N, m)
        self.middle = resolvable_decomposition(m, l)
        self.N, self.m, self.l = N, m, l
        self.eta_target = as_fraction(eta_target)
        self.seed = seed
        self.restarts = restarts
        self.bottoms: dict = {}
        self.states: dict = {}
        self.factor_full: list = [False] * self.top.n_factors

    @property
    def n_middle_factors(self) -> int:
        return self.middle.n_factors

    def block(self, j: int, b: int) -> tuple:
        return self.top.factors[j][b]

    def state(self, j: int, b: int) -> KmState:
        key = (j, b)
        if key not in self.states:
            self.states[key] = KmState()
        return self.states[key]

    def bottom(self, s_type: IsoType) -> EtaFactorization:
        if s_type not in self.bottoms:
            # seed derived from the type so the result does not depend on call order
            h = abs(hash((s_type.order, s_type.edges))) % (2**32)
            seed = np.random.SeedSequence([int(self.seed) % (2**32), h, self.l])
            self.bottoms[s_type] = eta_factorize(
                self.l, s_type, self.eta_target, np.random.default_rng(seed), self.restarts
            )
        return self.bottoms[s_type]

    def n_matchings(self, s_type: IsoType) -> int:
        return self.bottom(s_type).t

    def can_accept(self, j: int, b: int, s_type: IsoType) -> bool:
        """Whether the K_m could host a chunk of ``s_type`` right now (no mutation)."""
        st = self.state(j, b)
        if st.full:
            return False
        f = st.current.get(s_type)
        if f is not None and f not in st.full_factors:
            return True
        return len(st.reserved) + len(st.full_factors - set(st.reserved)) < self.n_middle_factors

    def matching(self, j: int, b: int, f: int, k: int, s_type: IsoType) -> list[tuple]:
        """Host placements of the ``k``-th S-matching of middle factor ``f`` in block (j, b)."""
        host = self.block(j, b)
        bottom = self.bottom(s_type)
        out = []
        for kl in self.middle.factors[f]:
            for pl in bottom.matchings[k]:
                out.append(tuple(host[kl[x]] for x in pl))
        return out

    def factor_edges(self) -> int:
        """Edges of one ``K_l``-factor of a ``K_m``."""
        return math.comb(self.l, 2) * (self.m // self.l)


FULL = None


def reserve_factor(ld: LayeredDesign, km_index, s_type: IsoType):
    """Reserve an unreserved, non-full ``K_l``-factor of a ``K_m`` for ``s_type``.

    Returns the middle-factor index, or ``FULL`` after marking the ``K_m``
    (and with it its ``K_m``-factor) full when none is left.
    """
    j, b = km_index
    st = ld.state(j, b)
    if st.full:
        raise ValueError(f"K_m {km_index} is full")
    for f in range(ld.n_middle_factors):
        if f not in st.reserved and f not in st.full_factors:
            ld.bottom(s_type)
            st.reserved[f] = s_type
            st.current[s_type] = f
            st.cursor[f] = 0
            return f
    st.full = True
    ld.factor_full[j] = True
    st.current.pop(s_type, None)
    return FULL
