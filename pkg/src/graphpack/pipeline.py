"""Parameter planning and the end-to-end packing pipeline."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .assignment import AssignmentState, assign_component_graph, plan_chunks, waste_report
from .balancing import balance, balance_certificate, compute_profile
from .designs import LayeredDesign, is_supported
from .embedding import embed_separators, make_partition
from .graph import EdgeTable, GraphSequence, PackingMap, validate_sequence, verify_packing
from .isotypes import census
from .separation import SeparatorConfig, as_fraction, separate

MODES = ("best-effort", "strict-regime")


class ValidationFailed(ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"sequence fails validation: {sorted(report.failed_clauses())}")


class PlanInfeasible(ValueError):
    def __init__(self, checks):
        self.checks = checks
        failed = [c for c in checks if not c["holds"]]
        msg = "; ".join(f"{c['name']}: {c['lhs']} vs {c['rhs']}" for c in failed)
        super().__init__(f"no feasible parameters ({msg})")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        self.stage, self.cause = stage, cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


@dataclass
class RunConfig:
    epsilon: Fraction = Fraction(4, 5)
    xi: Fraction | None = None
    delta: Fraction | None = None
    eta: Fraction | None = None
    s: int | None = None
    m: int | None = None
    l: int | None = None
    n_x: int | None = None
    seed: int = 0
    strategy: str = "auto"
    mode: str = "best-effort"
    advance_policy: str = "on-demand"
    balance_attempts: int = 64
    retries: int = 3
    eta_restarts: int = 32
    checkpoint_every: int = 0
    checkpoint_path: str | None = None

    def __post_init__(self):
        self.epsilon = as_fraction(self.epsilon)
        for name in ("xi", "delta", "eta"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, as_fraction(val))
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (0 < self.epsilon):
            raise ValueError("epsilon must be positive")
        if self.xi is not None and not (0 < self.xi < self.epsilon):
            raise ValueError("need 0 < xi < epsilon")


@dataclass
class Plan:
    mode: str
    n: int
    epsilon: Fraction
    xi: Fraction
    delta: Fraction
    eta: Fraction
    s: int
    m: int
    l: int
    n_x: int
    n_y: int
    checks: list = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.n_x + self.n_y

    def to_json(self) -> dict:
        d = asdict(self)
        for k in ("epsilon", "xi", "delta", "eta"):
            d[k] = str(d[k])
        d["N"] = self.N
        return d


def asymptotic_constants(epsilon, delta_max: int) -> dict:
    eps = as_fraction(epsilon)
    xi = eps / (12 * delta_max**2)
    return {"xi": xi, "delta": eps**2 / (72 * delta_max**2), "eta": xi / 8}


def _check(name, lhs, rhs, holds):
    return {"name": name, "lhs": str(lhs), "rhs": str(rhs), "holds": bool(holds)}


def strict_plan(n: int, delta_max: int, cfg: RunConfig) -> Plan:
    """Parameters with the asymptotic constants, rejected with the failing inequalities.

    At desk scale ``n`` never exceeds ``n_0 > 2^(2m)``, so this raises
    PlanInfeasible naming every inequality that fails.
    """
    c = asymptotic_constants(cfg.epsilon, delta_max)
    xi = cfg.xi or c["xi"]
    delta = cfg.delta or c["delta"]
    eta = cfg.eta or xi / 8
    s = cfg.s or 2
    l = cfg.l or s * s + 1
    sigma = 2 ** (s * s)
    m_min = math.floor(16 * sigma * l / xi) + 1
    m = cfg.m or m_min
    n0 = max(Fraction(4 * m * m) / xi, Fraction(2) ** (2 * m))
    checks = [
        _check("xi = eps/(12 Delta^2)", xi, c["xi"], xi <= c["xi"]),
        _check("delta <= eps^2/(72 Delta^2)", delta, c["delta"], delta <= c["delta"]),
        _check("l > s^2", l, s * s, l > s * s),
        _check("m > 16 sigma l / xi", m, Fraction(16 * sigma * l) / xi, m > 16 * sigma * l / xi),
        _check("n > n0 = max(4m^2/xi, 2^(2m))", n, "2^%d" % (2 * m) if m > 64 else n0, n > n0),
    ]
    if all(ch["holds"] for ch in checks):
        lo = math.ceil((1 + xi / 2) * n)
        hi = math.floor((1 + xi) * n)
        n_x = next((N for N in range(lo, hi + 1) if is_supported(N, m)), None)
        checks.append(_check("supported N in [(1+xi/2)n, (1+xi)n]", n_x, m, n_x is not None))
        if n_x is not None:
            n_y = math.floor((cfg.epsilon - xi) * n)
            return Plan("strict-regime", n, cfg.epsilon, xi, delta, eta, s, m, l, n_x, n_y, checks)
    raise PlanInfeasible(checks)


def best_effort_plans(n: int, delta_max: int, cfg: RunConfig) -> list[Plan]:
    """Candidate desk-scale plans, most promising first.

    The default works with components of order 2 (``s = 2``) placed along a
    1-factorization of ``K_X`` (``m = l = 2``, ``eta = 0``) and spends the
    rest of the ``(1+eps)n`` host vertices on the reserve set.
    """
    c = asymptotic_constants(cfg.epsilon, max(delta_max, 1))
    N_total = math.floor((1 + cfg.epsilon) * n)
    s = cfg.s or 2
    m = cfg.m or 2
    l = cfg.l or m
    eta = cfg.eta if cfg.eta is not None else Fraction(0)
    delta = cfg.delta or c["delta"]
    if cfg.n_x is not None:
        splits = [cfg.n_x]
    else:
        base = [Fraction(55, 100), Fraction(50, 100), Fraction(60, 100), Fraction(45, 100), Fraction(65, 100)]
        splits = []
        for frac in base:
            N = math.floor(frac * N_total)
            for cand in range(N, 1, -1):
                if cand % m == 0 and is_supported(cand, m) and cand not in splits:
                    splits.append(cand)
                    break
    plans = []
    for n_x in splits:
        n_y = N_total - n_x
        if n_y < 1 or n_x < m:
            continue
        xi = cfg.xi or max(Fraction(n_x - n, n), c["xi"])
        plans.append(Plan("best-effort", n, cfg.epsilon, xi, delta, eta, s, m, l, n_x, n_y, []))
    return plans


def plan(seq: GraphSequence, cfg: RunConfig) -> list[Plan]:
    if cfg.mode == "strict-regime":
        return [strict_plan(seq.n, seq.delta_max, cfg)]
    return best_effort_plans(seq.n, seq.delta_max, cfg)


# -- results --------------------------------------------------------------------


@dataclass
class RunResult:
    ok: bool
    N: int
    packing: PackingMap | None
    plan: Plan | None
    waste: dict | None = None
    certificate: dict | None = None
    embedding: dict | None = None
    separations: list | None = None
    verify_problems: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    peak_edges: int = 0
    stage: str | None = None
    y_usage: list = field(default_factory=list)
    n_x: int = 0

    def usage_csv(self) -> str:
        rows = ["y,usage"] + [f"{self.n_x + k},{c}" for k, c in enumerate(self.y_usage)]
        return "\n".join(rows) + "\n"

    def to_json(self, timings: bool = True) -> dict:
        out = {
            "ok": self.ok,
            "N": self.N,
            "plan": self.plan.to_json() if self.plan else None,
            "waste": self.waste,
            "certificate": self.certificate,
            "embedding": self.embedding,
            "verify_problems": self.verify_problems,
            "failures": self.failures,
            "failed_stage": self.stage,
            "peak_edge_table_occupancy": self.peak_edges,
            "packing": self.packing.to_json() if self.packing else None,
        }
        if timings:
            out["timings"] = self.timings
        return out

    def dumps(self, timings: bool = False) -> str:
        return json.dumps(self.to_json(timings), sort_keys=True)


# -- stages -----------------------------------------------------------------------


@dataclass
class _Prepared:
    stripped: list  # per graph: (Graph without isolated vertices, kept original ids)
    seps: list
    comp_lists: list  # per graph: list of component vertex lists (stripped ids)
    censuses: list


def _prepare(seq: GraphSequence, p: Plan, cfg: RunConfig, timings: dict) -> _Prepared:
    t0 = time.perf_counter()
    stripped = [g.strip_isolated() for g in seq.graphs]
    scfg = SeparatorConfig(strategy=cfg.strategy)
    seps = []
    enforce = p.mode == "strict-regime"
    for i, (g, _) in enumerate(stripped):
        try:
            seps.append(separate(g, p.delta, p.s, scfg, enforce_budget=enforce) if g.n_vertices else None)
        except Exception as exc:
            raise StageError("separate", exc) from exc
    timings["separate"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    comp_lists, censuses = [], []
    for (g, _), sep in zip(stripped, seps):
        if sep is None:
            comp_lists.append([])
            censuses.append(census([], p.s))
            continue
        bnd = sep.boundary(g)
        comps = [list(c) for c in sep.components]
        pairs = []
        for c in comps:
            sub, labels = g.induced_subgraph(c)
            pairs.append((sub, [k for k, v in enumerate(labels) if v in bnd]))
        comp_lists.append(comps)
        censuses.append(census(pairs, p.s))
    timings["census"] = time.perf_counter() - t0
    return _Prepared(stripped, seps, comp_lists, censuses)


def _attempt(seq: GraphSequence, p: Plan, cfg: RunConfig, prep: _Prepared, seed: int, timings: dict):
    strict = p.mode == "strict-regime"
    t0 = time.perf_counter()
    try:
        ld = LayeredDesign(p.n_x, p.m, p.l, p.eta, seed=seed, restarts=cfg.eta_restarts)
    except Exception as exc:
        raise StageError("designs", exc) from exc
    st = AssignmentState(ld, cfg.advance_policy, edges=EdgeTable(p.N))
    try:
        for i, cen in enumerate(prep.censuses):
            cp = plan_chunks(cen, p.m, p.eta)
            assign_component_graph(st, i, cen, cp, prep.comp_lists[i], strict_fit=strict)
            if cfg.checkpoint_every and cfg.checkpoint_path and (i + 1) % cfg.checkpoint_every == 0:
                st.dump_checkpoint(cfg.checkpoint_path)
    except Exception as exc:
        raise StageError("assign", exc) from exc
    sigma = max((len(c.ordering) for c in prep.censuses), default=0)
    waste = waste_report(st, sigma, seq.delta_max)
    timings["assign"] = timings.get("assign", 0) + time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        profile = compute_profile(st)
        bal = balance(st, p.xi, p.n, seed=seed, max_attempts=cfg.balance_attempts, strict=strict)
    except Exception as exc:
        raise StageError("balance", exc) from exc
    cert = balance_certificate(bal, profile, p.xi, p.n)
    timings["balance"] = timings.get("balance", 0) + time.perf_counter() - t0

    t0 = time.perf_counter()
    table = EdgeTable(p.N)
    for i, mp in bal.maps.items():
        g = prep.stripped[i][0]
        for u, v in g.edges:
            if u in mp and v in mp:
                if table.mark(mp[u], mp[v], i) != -1:
                    raise StageError("balance", AssertionError("edge reuse after balancing"))
    part = make_partition(p.n_x, p.n_y, table, p.delta, p.n)
    graphs = [g for g, _ in prep.stripped]
    seps = [sorted(s.separator) if s is not None else [] for s in prep.seps]
    try:
        full, est = embed_separators(graphs, seps, bal.maps, part, strict=strict)
    except Exception as exc:
        raise StageError("embed", exc) from exc
    timings["embed"] = timings.get("embed", 0) + time.perf_counter() - t0

    # re-attach isolated vertices and return to the caller's vertex ids
    maps = []
    for i, g in enumerate(seq.graphs):
        kept = prep.stripped[i][1]
        local = full.get(i, {})
        mp = {kept[v]: h for v, h in local.items()}
        taken = set(mp.values())
        free = (x for x in range(p.N) if x not in taken)
        for v in range(g.n_vertices):
            if v not in mp:
                mp[v] = next(free)
        maps.append(mp)
    pm = PackingMap(maps, p.N)
    est_json = est.to_json()
    est_json["usage"] = [int(c) for c in part.usage]
    return pm, waste.to_json(), cert.to_json(), est_json, max(table.peak, st.edges.peak)


def run_pipeline(cfg: RunConfig, seq: GraphSequence) -> RunResult:
    """separate, census, plan, assign, balance, embed, then verify.

    The verdict is always that of the final verification. In best-effort mode
    every candidate plan is tried with ``cfg.retries`` derived seeds before
    the run is declared failed.
    """
    timings: dict = {}
    t_start = time.perf_counter()
    if len(seq.graphs) == 0:
        N = math.floor((1 + cfg.epsilon) * seq.n)
        pm = PackingMap([], N)
        rep = verify_packing(seq, pm, N)
        return RunResult(rep.passed, N, pm, None, timings={"total": 0.0})
    rep = validate_sequence(seq)
    if not rep.passed:
        raise ValidationFailed(rep)
    t0 = time.perf_counter()
    plans = plan(seq, cfg)
    timings["plan"] = time.perf_counter() - t0
    failures = []
    last_stage = None
    prepared = {}
    for p in plans:
        key = (p.s, p.delta)
        try:
            if key not in prepared:
                prepared[key] = _prepare(seq, p, cfg, timings)
        except StageError as exc:
            failures.append({"plan": p.to_json(), "stage": exc.stage, "error": str(exc.cause)})
            last_stage = exc.stage
            if cfg.mode == "strict-regime":
                raise
            continue
        prep = prepared[key]
        for r in range(max(1, cfg.retries)):
            seed = int(np.random.SeedSequence([cfg.seed, r]).generate_state(1)[0])
            try:
                pm, waste, cert, est, peak = _attempt(seq, p, cfg, prep, seed, timings)
            except StageError as exc:
                failures.append({"plan": p.to_json(), "retry": r, "stage": exc.stage, "error": str(exc.cause)})
                last_stage = exc.stage
                if cfg.mode == "strict-regime":
                    raise
                continue
            t0 = time.perf_counter()
            vrep = verify_packing(seq, pm, p.N)
            timings["verify"] = time.perf_counter() - t0
            timings["total"] = time.perf_counter() - t_start
            seps = [s.to_json() if s is not None else None for s in prep.seps]
            usage = est.pop("usage")
            return RunResult(
                vrep.passed, p.N, pm, p, waste, cert, est, seps,
                [f"{q.kind}: {q.detail}" for q in vrep.problems], failures, timings, peak,
                None if vrep.passed else "verify", usage, p.n_x,
            )
    timings["total"] = time.perf_counter() - t_start
    N = plans[0].N if plans else 0
    return RunResult(False, N, None, plans[0] if plans else None, failures=failures, timings=timings, stage=last_stage)
