import json
from fractions import Fraction

import pytest

from graphpack.graph import GraphSequence, complete_graph, verify_packing
from graphpack.instances import generate_instance
from graphpack.oracle import BudgetExhausted, Unsat, brute_force_pack
from graphpack.pipeline import (
    PlanInfeasible,
    RunConfig,
    ValidationFailed,
    best_effort_plans,
    asymptotic_constants,
    plan,
    run_pipeline,
)


def test_empty_sequence():
    res = run_pipeline(RunConfig(), GraphSequence((), 10, 3))
    assert res.ok and res.N == 18 and res.packing.maps == []


def test_gyarfas_five():
    seq = generate_instance("gyarfas-exact", 5, 4, seed=0)
    res = run_pipeline(RunConfig(epsilon=1), seq)
    assert res.ok and res.N <= 10
    assert verify_packing(seq, res.packing, res.N).passed
    # the oracle agrees that the instance is packable at this order
    assert not isinstance(brute_force_pack(seq, res.N), (Unsat, BudgetExhausted))


def test_strict_rejects_small_n():
    seq = generate_instance("random-trees", 30, 3, seed=0)
    with pytest.raises(PlanInfeasible) as exc:
        run_pipeline(RunConfig(mode="strict-regime"), seq)
    failing = [c["name"] for c in exc.value.checks if not c["holds"]]
    assert any(name.startswith("n > n0") for name in failing)


def test_validation_failure():
    seq = GraphSequence((complete_graph(3), complete_graph(3)), 3, 2)
    with pytest.raises(ValidationFailed):
        run_pipeline(RunConfig(), seq)


def test_asymptotic_constants():
    c = asymptotic_constants(Fraction(1), 2)
    assert c == {"xi": Fraction(1, 48), "delta": Fraction(1, 288), "eta": Fraction(1, 384)}


def test_best_effort_plan_shape():
    ps = best_effort_plans(60, 3, RunConfig())
    assert ps and all(p.N <= 108 and p.n_x % p.m == 0 for p in ps)
    assert ps[0].n_x == 58


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(mode="fast")
    with pytest.raises(ValueError):
        RunConfig(epsilon=Fraction(1, 2), xi=Fraction(1, 2))


def test_determinism():
    seq = generate_instance("random-trees", 30, 3, seed=4)
    a = run_pipeline(RunConfig(seed=11), seq)
    b = run_pipeline(RunConfig(seed=11), seq)
    assert a.ok and a.dumps() == b.dumps()
    assert json.loads(a.dumps())["N"] == a.N


@pytest.mark.parametrize("kind", ["random-trees", "caterpillars", "random-outerplanar"])
def test_kinds_verify(kind):
    seq = generate_instance(kind, 40, 3, seed=2)
    res = run_pipeline(RunConfig(seed=2), seq)
    assert res.ok == verify_packing(seq, res.packing, res.N).passed if res.packing else not res.ok
    assert res.ok


def test_checkpoints(tmp_path):
    path = tmp_path / "ck.json"
    seq = generate_instance("random-trees", 30, 3, seed=1)
    res = run_pipeline(RunConfig(checkpoint_every=2, checkpoint_path=str(path)), seq)
    assert res.ok and json.loads(path.read_text())["N"] > 0


def test_usage_csv():
    seq = generate_instance("random-trees", 30, 3, seed=1)
    res = run_pipeline(RunConfig(), seq)
    lines = res.usage_csv().strip().splitlines()
    assert lines[0] == "y,usage" and len(lines) == 1 + res.N - res.n_x
