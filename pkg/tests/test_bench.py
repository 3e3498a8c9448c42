import csv
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcp_rcjs.bench import (
    ExperimentReport,
    OracleTooLarge,
    ReportRow,
    brute_force_optimum,
    default_selector,
    run_experiment,
    single_pass_construct,
)
from gcp_rcjs.cp import SolverConfig, Status, build_model, solve
from gcp_rcjs.instance import GenConfig, generate_instance, total_weighted_tardiness, validate_schedule
from gcp_rcjs.selector import parse_selector, priorities_for

from helpers import exhaustive_optimum, make_instance, small_instance, tight_instance


def test_oracle_single_job():
    inst = make_instance([(0, 3, 4, 5, 2, 1)])
    res = brute_force_optimum(inst)
    assert res.optimal_schedule.starts == (3,)
    assert res.optimal_objective == 2 * (3 + 4 - 5)
    assert res.enumerated_count == 1


def test_oracle_weighted_pair():
    inst = make_instance([(0, 0, 5, 6, 1, 0), (0, 0, 1, 1, 10, 0)])
    res = brute_force_optimum(inst)
    assert res.optimal_objective == 0
    assert res.optimal_schedule.starts == (1, 0)


def test_oracle_guard():
    inst = make_instance([(k % 2, 0, 1, 5, 1, 0) for k in range(10)])
    with pytest.raises(OracleTooLarge):
        brute_force_optimum(inst)


@pytest.mark.parametrize("seed", range(12))
def test_oracle_schedule_consistent_and_matches_enumeration(seed):
    inst = tight_instance(seed, slack=seed % 3)
    res = brute_force_optimum(inst)
    assert validate_schedule(inst, res.optimal_schedule) == []
    assert total_weighted_tardiness(inst, res.optimal_schedule) == res.optimal_objective
    assert res.optimal_objective == exhaustive_optimum(inst)


def test_oracle_agrees_with_cp_default_selector():
    for seed in range(10):
        inst = small_instance(seed)
        res = solve(build_model(inst), SolverConfig(node_budget=10**6, selector=default_selector()))
        assert res.status is Status.OPTIMAL
        assert res.best_objective == brute_force_optimum(inst).optimal_objective


def test_single_pass_release_order():
    inst = make_instance([(0, 6, 1, 20, 1, 0), (0, 0, 1, 20, 1, 0), (0, 3, 1, 20, 1, 0)])
    sched = single_pass_construct(inst, priorities=[-j.release for j in inst.jobs])
    assert sched.starts == (6, 0, 3)


def test_single_pass_respects_chain():
    inst = make_instance([(0, 0, 2, 9, 1, 0), (0, 0, 2, 9, 1, 0), (0, 0, 2, 9, 1, 0)], precs=[(0, 1), (1, 2)])
    sched = single_pass_construct(inst, priorities=[0, 5, 9])
    assert sched.starts == (0, 2, 4)


def test_single_pass_prefers_high_priority():
    inst = make_instance([(0, 0, 2, 9, 1, 0), (0, 0, 2, 9, 1, 0)])
    assert single_pass_construct(inst, priorities=[1, 2]).starts == (2, 0)
    assert single_pass_construct(inst, priorities=[1, 1]).starts == (0, 2)  # ties by id


def test_single_pass_fills_resource_gaps():
    # job 2 fits beside job 0 although job 1 was placed later in time
    inst = make_instance([(0, 0, 4, 9, 1, 1), (1, 4, 2, 9, 1, 2), (1, 0, 3, 9, 1, 1)], R=2)
    sched = single_pass_construct(inst, priorities=[3, 2, 1])
    assert sched.starts == (0, 4, 0)
    assert validate_schedule(inst, sched) == []


def test_single_pass_valid_on_500_instances():
    sel = parse_selector("(- (% W PT) DD)")
    for seed in range(500):
        cfg = GenConfig(machines=1 + seed % 6, precedence_probability=(0.2, 0.5, 0.8)[seed % 3],
                        resource_utilisation=(0.25, 0.5, 0.75)[seed // 3 % 3], seed=seed)
        inst = generate_instance(cfg)
        assert validate_schedule(inst, single_pass_construct(inst, sel)) == []


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), prios=st.lists(st.integers(-5, 5), min_size=40, max_size=40))
def test_single_pass_valid_for_any_priorities(seed, prios):
    inst = generate_instance(GenConfig(machines=3, precedence_probability=0.6, seed=seed))
    sched = single_pass_construct(inst, priorities=prios[: inst.n] + [0] * max(0, inst.n - 40))
    assert validate_schedule(inst, sched) == []


def test_default_selector_is_constant():
    for seed in range(5):
        inst = generate_instance(GenConfig(machines=2, seed=seed))
        assert set(priorities_for(default_selector(), inst)) == {0}
    assert str(default_selector()) == "(- PT PT)"


def test_default_selector_repeatable():
    inst = generate_instance(GenConfig(machines=3, seed=4))
    runs = [solve(build_model(inst), SolverConfig(node_budget=1000, selector=default_selector())) for _ in range(2)]
    assert runs[0].best_schedule == runs[1].best_schedule
    assert runs[0].stats.incumbents == runs[1].stats.incumbents


def test_run_experiment_shape():
    inst = small_instance(1)
    report = run_experiment({"a": inst}, ["default", "oracle"], node_budget=1000)
    assert [(r.instance_id, r.method) for r in report.rows] == [("a", "default"), ("a", "oracle")]
    assert len(report.aggregates) == 2
    assert report.rows[0].objective == report.rows[1].objective


def test_run_experiment_oracle_is_all_optimal():
    items = [(f"s{k}", small_instance(k)) for k in range(6)]
    report = run_experiment(items, ["oracle", "default"], node_budget=10**6)
    for agg in report.aggregates:
        assert agg.pct_optimal == 100
    assert report.objectives("oracle") == report.objectives("default")


def test_run_experiment_warm_start_dominates_single_pass():
    sel = parse_selector("(% W (+ PT DD))")
    items = [(f"g{k}", generate_instance(GenConfig(machines=3, seed=k))) for k in range(5)]
    report = run_experiment(items, ["single-pass", "cp-warm"], node_budget=200, selector=sel)
    sp, warm = report.objectives("single-pass"), report.objectives("cp-warm")
    assert all(warm[k] <= sp[k] for k in sp)


def test_run_experiment_errors():
    inst = small_instance(2)
    with pytest.raises(ValueError, match="unknown method"):
        run_experiment({"a": inst}, ["nope"])
    with pytest.raises(ValueError, match="selector"):
        run_experiment({"a": inst}, ["cp"])
    big = generate_instance(GenConfig(machines=2, seed=0))
    with pytest.raises(OracleTooLarge):
        run_experiment({"b": big}, ["oracle"])


def test_run_experiment_threads_same_rows():
    items = [(f"g{k}", generate_instance(GenConfig(machines=2, seed=k))) for k in range(4)]
    a = run_experiment(items, ["default"], node_budget=300, threads=1)
    b = run_experiment(items, ["default"], node_budget=300, threads=3)
    key = lambda rows: [(r.instance_id, r.method, r.objective, r.status, r.nodes) for r in rows]
    assert key(a.rows) == key(b.rows)


def test_aggregates_recomputable():
    rows = [
        ReportRow("x", 2, 7, "default", Fraction(3), "OPTIMAL", 10, 1),
        ReportRow("y", 2, 6, "default", Fraction(5, 2), "FEASIBLE", 10, 1),
        ReportRow("z", 3, 9, "default", None, "UNKNOWN", 10, 1),
        ReportRow("x", 2, 7, "oracle", Fraction(3), "OPTIMAL", 10, 1),
    ]
    aggs = {(a.machines, a.method): a for a in ExperimentReport(rows).aggregates}
    assert aggs[(2, "default")].mean_objective == Fraction(11, 4)
    assert aggs[(2, "default")].pct_optimal == 50
    assert aggs[(3, "default")].mean_objective is None
    assert aggs[(3, "default")].pct_optimal == 0
    assert aggs[(2, "oracle")].n == 1


def test_write_csv(tmp_path):
    items = [(f"s{k}", small_instance(k)) for k in range(3)]
    report = run_experiment(items, ["default", "oracle"], node_budget=10**5)
    rows_path, agg_path = tmp_path / "r.csv", tmp_path / "a.csv"
    report.write_csv(rows_path, agg_path)
    with open(rows_path) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["instance_id", "machines", "jobs", "method", "objective", "status", "nodes",
                             "elapsed_ms"]
    assert len(rows) == 6
    with open(agg_path) as fh:
        aggs = list(csv.DictReader(fh))
    assert list(aggs[0]) == ["machines", "method", "mean_objective", "pct_optimal", "n"]
    for a in aggs:
        objs = [Fraction(r["objective"]) for r in rows if r["method"] == a["method"]]
        assert Fraction(a["mean_objective"]) == sum(objs, Fraction(0)) / len(objs)
