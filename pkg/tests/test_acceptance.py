"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The training criteria share a session fixture: five seeded desk-scale runs
plus one repeat run (about 30 minutes on one core).
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from gcp_rcjs.bench import brute_force_optimum, default_selector, single_pass_construct
from gcp_rcjs.cp import Propagation, SolverConfig, Status, build_model, propagate, solve
from gcp_rcjs.gp import FitnessEvaluator, GPConfig, crossover, evolve, fitness, mutate, preselect
from gcp_rcjs.instance import GenConfig, generate_instance, total_weighted_tardiness, validate_schedule
from gcp_rcjs.selector import (
    FULL,
    GROW,
    Node,
    depth,
    format_selector,
    parse_selector,
    parse_tree,
    priorities_for,
    random_tree,
)

from helpers import PROBS, UTILS, feasible_hull, make_instance, small_instance, tight_instance

SEEDS = (0, 1, 2, 3, 4)
BUDGET = 50_000


def corpus(machines, base_seed, count):
    return [
        generate_instance(GenConfig(machines=machines, precedence_probability=PROBS[k % 3],
                                    resource_utilisation=UTILS[k // 3 % 3], seed=base_seed + k))
        for k in range(count)
    ]


TRAIN = corpus(4, 1000, 10)
SMALL = corpus(3, 2000, 4)
HELD_OUT = corpus(4, 5000, 30)


def log_key(state):
    return [(e.generation, e.best_sampled_fitness, e.gen_best_full_fitness, e.best_so_far_full_fitness, e.nodes_used)
            for e in state.log]


@pytest.fixture(scope="session")
def training():
    runs, seconds = {}, {}
    for seed in SEEDS:
        t0 = time.perf_counter()
        runs[seed] = evolve(GPConfig(seed=seed, node_budget=BUDGET), TRAIN, SMALL)
        seconds[seed] = time.perf_counter() - t0
    repeat = evolve(GPConfig(seed=SEEDS[0], node_budget=BUDGET), TRAIN, SMALL)
    return runs, seconds, repeat


def held_out_mean(selector) -> Fraction:
    total = Fraction(0)
    for inst in HELD_OUT:
        res = solve(build_model(inst), SolverConfig(node_budget=BUDGET, selector=selector))
        total += res.best_objective
    return total / len(HELD_OUT)


def test_oracle_exactness(verdict):
    t0 = time.perf_counter()
    mismatches = []
    for seed in range(50):
        inst = small_instance(seed, machines=2, max_jobs=7)
        res = solve(build_model(inst), SolverConfig(node_budget=10**7))
        expected = brute_force_optimum(inst).optimal_objective
        if res.status is not Status.OPTIMAL or res.best_objective != expected:
            mismatches.append(seed)
    elapsed = time.perf_counter() - t0
    verdict("oracle exactness: 50 instances <= 7 jobs, CP OPTIMAL == oracle, < 60 s",
            not mismatches and elapsed < 60, f"mismatches={mismatches} elapsed={elapsed:.1f}s")


def test_propagation_soundness(verdict):
    violations = 0
    schedules = 0
    for seed in range(30):
        inst = tight_instance(seed, slack=seed % 3)
        model = build_model(inst)
        store = model.initial_store()
        status = propagate(model, store)
        lo, hi, count = feasible_hull(inst)
        schedules += count
        if count and status is not Propagation.CONSISTENT:
            violations += 1
            continue
        for j in range(inst.n):
            dom = store.domain(j)
            if count and not (dom.min <= lo[j] and hi[j] <= dom.max):
                violations += 1
    verdict("propagation soundness: 30 instances <= 6 jobs, feasible schedules inside root domains",
            violations == 0, f"violations={violations} schedules={schedules}")


def test_solution_validity(verdict):
    sel = parse_selector("(- (% W PT) (min DD WLSUC))")
    bad = []
    checked = 0
    for seed in range(500):
        inst = generate_instance(GenConfig(machines=1 + seed % 6, precedence_probability=PROBS[seed % 3],
                                           resource_utilisation=UTILS[seed // 3 % 3], seed=10_000 + seed))
        model = build_model(inst)
        sp = single_pass_construct(inst, sel)
        emitted = [sp]
        for cfg in (
            SolverConfig(node_budget=300),
            SolverConfig(node_budget=300, selector=sel),
            SolverConfig(node_budget=300, selector=sel, warm_start=sp),
        ):
            res = solve(model, cfg)
            if res.best_schedule is not None:
                emitted.append(res.best_schedule)
                if total_weighted_tardiness(inst, res.best_schedule) != res.best_objective:
                    bad.append((seed, "objective"))
        for sched in emitted:
            checked += 1
            if validate_schedule(inst, sched):
                bad.append((seed, "violation"))
    verdict("solution validity: 500-instance corpus, every solve path and single-pass schedule valid",
            not bad, f"schedules={checked} bad={bad[:5]}")


def test_gp_mechanics(verdict):
    rng = np.random.default_rng(2024)
    pool = [random_tree(int(rng.integers(0, 8)), GROW if k % 2 else FULL, rng) for k in range(100)]
    malformed = 0
    for _ in range(10_000):
        a, b = pool[int(rng.integers(100))], pool[int(rng.integers(100))]
        for child in (*crossover(a, b, rng, max_depth=7), mutate(a, rng, max_depth=7)):
            if not isinstance(child, Node) or depth(child) > 7 or parse_tree(format_selector(child)) != child:
                malformed += 1

    small = [small_instance(s, jobs_per_machine=(4, 5), max_jobs=10) for s in range(3)]
    preselect_failures = 0
    for trial in range(5):
        ps = 6 + trial
        candidates = [random_tree(int(rng.integers(1, 6)), GROW, rng) for _ in range(2 * ps)]
        kept = preselect(candidates, small, ps, node_budget=500)
        scores = FitnessEvaluator(small, 500).mean_fitness(candidates)
        kept_ids = {id(r.selector.root) for r in kept}
        rejected = [f for t, f in zip(candidates, scores) if id(t) not in kept_ids]
        if len(kept) != ps or max(r.trial_fitness for r in kept) > min(rejected):
            preselect_failures += 1
    verdict("GP mechanics: 10000 crossover/mutation applications well-formed at depth <= 7; preselect keeps top PS",
            malformed == 0 and preselect_failures == 0,
            f"malformed={malformed} preselect_failures={preselect_failures}")


def test_fitness_fidelity(verdict):
    # hand values: 5 * (5 - 3) = 10; the short heavy job first gives 0;
    # of two unit-resource jobs with p=3, d=3 the heavier goes first: 0.5 * 3 = 1.5
    instances = [
        make_instance([(0, 0, 5, 3, 5, 0)]),
        make_instance([(0, 0, 5, 6, 1, 0), (0, 0, 1, 1, 10, 0)]),
        make_instance([(0, 0, 3, 3, 2, 1), (0, 0, 3, 3, "0.5", 1)]),
    ]
    hand = (Fraction(10) + Fraction(0) + Fraction(3, 2)) / 3
    values = [fitness(parse_selector(s), instances, 10_000) for s in ("(- PT PT)", "W", "(% DD PT)")]
    verdict("fitness fidelity: mean of per-instance best objectives on 3 hand-computed instances",
            all(v == hand for v in values), f"expected={hand} got={[str(v) for v in values]}")


@pytest.mark.slow
def test_training_monotone_and_deterministic(training, verdict):
    runs, seconds, repeat = training
    monotone = all(
        all(a.best_so_far_full_fitness >= b.best_so_far_full_fitness for a, b in zip(s.log, s.log[1:]))
        for s in runs.values()
    )
    full_length = all(len(s.log) == 21 for s in runs.values())
    repeatable = log_key(repeat) == log_key(runs[SEEDS[0]])
    slowest = max(seconds.values())
    verdict("training: best-so-far non-increasing in 5 seeds, repeat run identical, each run <= 30 min",
            monotone and full_length and repeatable and slowest <= 1800,
            f"monotone={monotone} repeatable={repeatable} slowest_run={slowest:.0f}s")


@pytest.mark.slow
def test_evolved_beats_default(training, verdict):
    runs, _, _ = training
    base = held_out_mean(default_selector())
    wins, detail = 0, []
    for seed, state in runs.items():
        mean = held_out_mean(state.best.selector)
        wins += mean <= base
        detail.append(f"{seed}:{float(mean):.1f}")
    verdict("behaviour: evolved selector mean TWT <= default on 30 held-out instances in >= 4 of 5 seeds",
            wins >= 4, f"default={float(base):.1f} evolved=[{' '.join(detail)}] wins={wins}")


@pytest.mark.slow
def test_warm_start_dominance(training, verdict):
    runs, _, _ = training
    selectors = [default_selector()] + [s.best.selector for s in runs.values()]
    violations = 0
    for sel in selectors:
        for inst in HELD_OUT:
            prios = priorities_for(sel, inst)
            sp = single_pass_construct(inst, priorities=prios)
            res = solve(build_model(inst), SolverConfig(node_budget=BUDGET, warm_start=sp), priorities=prios)
            if res.best_objective > total_weighted_tardiness(inst, sp):
                violations += 1
    verdict("warm start: CP objective <= injected single-pass objective on every held-out instance",
            violations == 0, f"selectors={len(selectors)} instances={len(HELD_OUT)} violations={violations}")

