"""Command-line front end: ``python -m graphpack <subcommand>``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

from .designs import EtaNotReached, UnsupportedParameters, eta_factorize, resolvable_decomposition
from .graph import Graph, GraphSequence, PackingMap, validate_sequence, verify_packing
from .instances import KINDS, GenerationFailed, generate_instance
from .isotypes import canonicalize
from .oracle import BacktrackBudget, BudgetExhausted, Unsat, brute_force_pack, tree_sequences, verify_design
from .pipeline import PlanInfeasible, RunConfig, StageError, ValidationFailed, plan, run_pipeline

EXIT_OK, EXIT_VALIDATION, EXIT_STAGE, EXIT_VERIFY = 0, 2, 3, 4


def _write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True, default=str)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _write_csv(path, header, rows):
    if path is None:
        return
    fh = sys.stdout if path == "-" else open(path, "w", newline="")
    try:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _config(args) -> RunConfig:
    return RunConfig(
        epsilon=Fraction(args.epsilon),
        xi=Fraction(args.xi) if args.xi else None,
        delta=Fraction(args.delta) if args.delta else None,
        eta=Fraction(args.eta) if args.eta is not None else None,
        s=args.s,
        m=args.m,
        l=args.l,
        n_x=args.n_x,
        seed=args.seed,
        strategy=args.strategy,
        mode=args.mode,
        advance_policy=args.advance_policy,
        balance_attempts=args.balance_attempts,
        retries=args.retries,
        checkpoint_every=args.checkpoint_every,
        checkpoint_path=args.checkpoint_path,
    )


def cmd_gen(args) -> int:
    try:
        seq = generate_instance(args.kind, args.n, args.delta_max, args.seed, args.fill)
    except GenerationFailed as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    _write_json(args.output or args.json_out or "-", seq.to_json())
    return EXIT_OK


def cmd_plan(args) -> int:
    seq = GraphSequence.load(args.sequence)
    rep = validate_sequence(seq)
    if not rep.passed:
        print(f"validation failed: {sorted(rep.failed_clauses())}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        plans = plan(seq, _config(args))
    except PlanInfeasible as exc:
        _write_json(args.json_out, {"feasible": False, "checks": exc.checks})
        return EXIT_STAGE
    _write_json(args.json_out, {"feasible": True, "plans": [p.to_json() for p in plans]})
    return EXIT_OK


def cmd_pack(args) -> int:
    seq = GraphSequence.load(args.sequence)
    try:
        res = run_pipeline(_config(args), seq)
    except ValidationFailed as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except (StageError, PlanInfeasible) as exc:
        print(str(exc), file=sys.stderr)
        if args.json_out and isinstance(exc, PlanInfeasible):
            _write_json(args.json_out, {"ok": False, "checks": exc.checks})
        return EXIT_STAGE
    if args.json_out:
        _write_json(args.json_out, res.to_json(timings=not args.no_timings))
    if args.packing_out and res.packing is not None:
        _write_json(args.packing_out, res.packing.to_json())
    if args.csv_out:
        _write_csv(args.csv_out, ["y", "usage"], [[res.n_x + k, c] for k, c in enumerate(res.y_usage)])
    print(f"ok={res.ok} N={res.N} failed_stage={res.stage}", file=sys.stderr)
    if res.ok:
        return EXIT_OK
    return EXIT_VERIFY if res.stage == "verify" else EXIT_STAGE


def cmd_verify(args) -> int:
    seq = GraphSequence.load(args.sequence)
    with open(args.packing) as fh:
        pm = PackingMap.from_json(json.load(fh))
    N = args.N if args.N is not None else pm.host_order
    rep = verify_packing(seq, pm, N)
    _write_json(args.json_out, {
        "passed": rep.passed,
        "edges_used": rep.edges_used,
        "N": N,
        "problems": [{"kind": p.kind, "graph": p.graph, "detail": p.detail} for p in rep.problems],
    })
    return EXIT_OK if rep.passed else EXIT_VERIFY


def _oracle_row(sid, res):
    if isinstance(res, PackingMap):
        return [sid, "sat", res.nodes, round(res.millis, 3)]
    if isinstance(res, Unsat):
        return [sid, "unsat", res.nodes, round(res.millis, 3)]
    return [sid, "budget", res.nodes, round(res.millis, 3)]


def cmd_oracle(args) -> int:
    budget = BacktrackBudget(args.node_limit, args.time_limit)
    rows = []
    if args.gyarfas:
        n = args.gyarfas
        for sid, trees in enumerate(tree_sequences(n)):
            seq = GraphSequence(tuple(trees), n, n)
            rows.append(_oracle_row(sid, brute_force_pack(seq, args.N or n, budget)))
    else:
        seq = GraphSequence.load(args.sequence)
        res = brute_force_pack(seq, args.N or seq.n, budget)
        rows.append(_oracle_row(0, res))
        if isinstance(res, PackingMap) and args.json_out:
            _write_json(args.json_out, res.to_json())
    _write_csv(args.csv_out or "-", ["sequence_id", "result", "nodes", "millis"], rows)
    if any(r[1] == "budget" for r in rows):
        return EXIT_STAGE
    return EXIT_OK if all(r[1] == "sat" for r in rows) else EXIT_VERIFY


def cmd_designs(args) -> int:
    if args.pattern:
        edges = [tuple(int(x) for x in e.split("-")) for e in args.pattern.split(",")]
        k = max(max(e) for e in edges) + 1
        s_type = canonicalize(Graph.from_edges(k, edges), ())
        try:
            f = eta_factorize(args.l, s_type, Fraction(args.eta), args.seed)
        except EtaNotReached as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_STAGE
        rep = verify_design(f, Fraction(args.eta))
        out = f.to_json()
        out["report"] = {"passed": rep.passed, "problems": rep.problems, "t": f.t}
        _write_json(args.json_out, out)
        return EXIT_OK if rep.passed else EXIT_VERIFY
    try:
        d = resolvable_decomposition(args.N, args.m)
    except UnsupportedParameters as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_STAGE
    rep = verify_design(d)
    out = d.to_json()
    out["report"] = {"passed": rep.passed, "problems": rep.problems}
    _write_json(args.json_out, out)
    return EXIT_OK if rep.passed else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json-out", default=None, help="write JSON here ('-' for stdout)")
    common.add_argument("--csv-out", default=None, help="write CSV here ('-' for stdout)")
    common.add_argument("--checkpoint-every", type=int, default=0, help="dump assignment state every k graphs")
    common.add_argument("--checkpoint-path", default="checkpoint.json")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--epsilon", default="4/5")
    run.add_argument("--xi")
    run.add_argument("--delta")
    run.add_argument("--eta")
    run.add_argument("--s", type=int)
    run.add_argument("--m", type=int)
    run.add_argument("--l", type=int)
    run.add_argument("--n-x", type=int)
    run.add_argument("--strategy", default="auto")
    run.add_argument("--mode", choices=("best-effort", "strict-regime"), default="best-effort")
    run.add_argument("--advance-policy", choices=("on-demand", "eager"), default="on-demand")
    run.add_argument("--balance-attempts", type=int, default=64)
    run.add_argument("--retries", type=int, default=3)

    p = argparse.ArgumentParser(prog="graphpack", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate an instance")
    g.add_argument("--kind", choices=KINDS, default="random-trees")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--delta-max", type=int, default=3)
    g.add_argument("--fill", type=float, default=0.9)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    pl = sub.add_parser("plan", parents=[common, run], help="choose parameters for a sequence")
    pl.add_argument("sequence")
    pl.set_defaults(func=cmd_plan)

    pk = sub.add_parser("pack", parents=[common, run], help="run the full pipeline")
    pk.add_argument("sequence")
    pk.add_argument("--packing-out")
    pk.add_argument("--no-timings", action="store_true", help="omit wall times from the JSON")
    pk.set_defaults(func=cmd_pack)

    v = sub.add_parser("verify", parents=[common], help="verify a packing")
    v.add_argument("sequence")
    v.add_argument("packing")
    v.add_argument("--N", type=int)
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", parents=[common], help="exhaustive packing search")
    o.add_argument("sequence", nargs="?")
    o.add_argument("--gyarfas", type=int, help="all tree sequences T_1..T_n")
    o.add_argument("--N", type=int)
    o.add_argument("--node-limit", type=int, default=10_000_000)
    o.add_argument("--time-limit", type=float, default=60.0)
    o.set_defaults(func=cmd_oracle)

    d = sub.add_parser("designs", parents=[common], help="build and verify a design")
    d.add_argument("--N", type=int)
    d.add_argument("--m", type=int)
    d.add_argument("--l", type=int)
    d.add_argument("--pattern", help="edge list like 0-1,1-2 for an eta-factorization of K_l")
    d.add_argument("--eta", default="1/10")
    d.set_defaults(func=cmd_designs)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "oracle" and not args.gyarfas and not args.sequence:
        print("oracle needs a sequence file or --gyarfas n", file=sys.stderr)
        return EXIT_VALIDATION
    if args.command == "designs" and not args.pattern and (args.N is None or args.m is None):
        print("designs needs --N and --m (or --pattern with --l)", file=sys.stderr)
        return EXIT_VALIDATION
    return args.func(args)
