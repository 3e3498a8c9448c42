"""Evolution of variable selectors.

Each generation evaluates the population on a random sample of training
instances (mean best objective reached by the CP search under a node
budget), re-evaluates the generation best on the whole training set, and
keeps it if it beats the best-so-far. Offspring come from tournament
selection with subtree crossover or subtree mutation; an oversized offspring
pool is screened on small instances and only the best ``population_size``
survive.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .cp import build_model, solve_ranked
from .instance import Instance, format_rational
from .selector import (
    FULL,
    GROW,
    Node,
    Selector,
    depth,
    priorities_for,
    random_tree,
    rank_key,
    replace_at,
    size,
    subtree_at,
)

log = logging.getLogger(__name__)

# stream tags for derived RNGs
_INIT, _SAMPLE, _BREED = 0, 1, 2


@dataclass(frozen=True)
class GPConfig:
    population_size: int = 50
    generations: int = 20
    tournament_size: int = 5
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    max_depth: int = 7
    intermediate_factor: int = 2
    sample_size: int = 3
    preselect_count: int = 4
    node_budget: int = 50_000
    preselect_node_budget: int = 5_000
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if min(self.crossover_rate, self.mutation_rate) < 0 or not math.isclose(
            self.crossover_rate + self.mutation_rate, 1.0, abs_tol=1e-9
        ):
            raise ValueError("crossover_rate and mutation_rate must be non-negative and sum to 1")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.intermediate_factor < 1:
            raise ValueError("intermediate_factor must be >= 1")
        if self.sample_size < 1 or self.preselect_count < 1:
            raise ValueError("sample sizes must be >= 1")
        if self.node_budget < 1 or self.preselect_node_budget < 1:
            raise ValueError("node budgets must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class FitnessRecord:
    selector: Selector
    sampled_fitness: Fraction | None = None
    trial_fitness: Fraction | None = None
    full_fitness: Fraction | None = None


@dataclass(frozen=True)
class GenerationLog:
    generation: int
    best_sampled_fitness: Fraction
    gen_best_full_fitness: Fraction
    best_so_far_full_fitness: Fraction
    nodes_used: int
    elapsed_ms: int


@dataclass
class TrainingState:
    population: list[FitnessRecord]
    generation: int
    best: FitnessRecord
    seed: int
    log: list[GenerationLog] = field(default_factory=list)


LOG_COLUMNS = (
    "generation",
    "best_sampled_fitness",
    "gen_best_full_fitness",
    "best_so_far_full_fitness",
    "nodes_used",
    "elapsed_ms",
)


def write_log_csv(path, entries: Sequence[GenerationLog]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for e in entries:
            w.writerow([
                e.generation,
                format_rational(e.best_sampled_fitness),
                format_rational(e.gen_best_full_fitness),
                format_rational(e.best_so_far_full_fitness),
                e.nodes_used,
                e.elapsed_ms,
            ])


def derived_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *stream]))


def default_threads() -> int:
    env = os.environ.get("GCP_RCJS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# fitness


def no_solution_penalty(instance: Instance) -> Fraction:
    """Worst-case TWT: every job completing at the horizon."""
    total = Fraction(0)
    for job in instance.jobs:
        late = instance.horizon - job.due
        if late > 0:
            total += job.weight * late
    return total


class FitnessEvaluator:
    """Mean best objective of selectors over a fixed instance list.

    Search results depend on a selector only through the job order its
    priorities induce, so solves are memoised on that order. Cache hits
    do not count towards ``nodes_used``.
    """

    def __init__(self, instances: Sequence[Instance], node_budget: int, threads: int = 1):
        self.instances = list(instances)
        self.models = [build_model(inst) for inst in self.instances]
        self.penalties = [no_solution_penalty(inst) for inst in self.instances]
        self.node_budget = node_budget
        self.threads = threads
        self.nodes_used = 0
        self._cache: dict[tuple[int, tuple[int, ...]], Fraction] = {}

    def objective(self, k: int, order: tuple[int, ...]) -> Fraction:
        return self._cache[(k, order)]

    def _solve(self, key: tuple[int, tuple[int, ...]]) -> tuple[Fraction, int]:
        k, order = key
        rank = np.empty(len(order), dtype=np.int64)
        rank[list(order)] = np.arange(len(order))
        res = solve_ranked(self.models[k], rank, self.node_budget)
        obj = res.best_objective if res.has_solution else self.penalties[k]
        return obj, res.stats.nodes

    def mean_fitness(self, trees: Sequence[Selector | Node], subset: Sequence[int] | None = None) -> list[Fraction]:
        subset = range(len(self.instances)) if subset is None else list(subset)
        if not subset:
            raise ValueError("fitness needs a non-empty instance set")
        keys = [[(k, rank_key(priorities_for(t, self.instances[k]))) for k in subset] for t in trees]
        todo = []
        seen = set()
        for row in keys:
            for key in row:
                if key not in self._cache and key not in seen:
                    seen.add(key)
                    todo.append(key)
        if self.threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                results = list(pool.map(self._solve, todo))
        else:
            results = [self._solve(key) for key in todo]
        for key, (obj, nodes) in zip(todo, results):
            self._cache[key] = obj
            self.nodes_used += nodes
        return [sum((self._cache[key] for key in row), Fraction(0)) / len(row) for row in keys]


def fitness(selector: Selector | Node, instance_set: Sequence[Instance], node_budget: int) -> Fraction:
    """Mean over ``instance_set`` of the best objective found within ``node_budget``.

    An instance without any incumbent contributes :func:`no_solution_penalty`.
    """
    return FitnessEvaluator(instance_set, node_budget).mean_fitness([selector])[0]


# ---------------------------------------------------------------------------
# variation


def _as_node(tree: Selector | Node) -> Node:
    return tree.root if isinstance(tree, Selector) else tree


def init_population(config: GPConfig, rng: np.random.Generator) -> list[Selector]:
    """Ramped half-and-half over depths 2..max_depth."""
    low = min(2, config.max_depth)
    depths = list(range(low, config.max_depth + 1))
    pop = []
    for i in range(config.population_size):
        d = depths[(i // 2) % len(depths)]
        method = GROW if i % 2 == 0 else FULL
        pop.append(Selector(random_tree(d, method, rng), generation=0))
    return pop


def tournament_select(population: Sequence[FitnessRecord], size: int, rng: np.random.Generator) -> FitnessRecord:
    if not population:
        raise ValueError("empty population")
    drawn = rng.integers(len(population), size=size)
    best = min(int(i) for i in drawn)
    for i in drawn:
        i = int(i)
        if (population[i].sampled_fitness, i) < (population[best].sampled_fitness, best):
            best = i
    return population[best]


def crossover(parent_a: Selector | Node, parent_b: Selector | Node, rng: np.random.Generator,
              max_depth: int = 7) -> tuple[Node, Node]:
    a, b = _as_node(parent_a), _as_node(parent_b)
    ia = int(rng.integers(size(a)))
    ib = int(rng.integers(size(b)))
    sub_a, _ = subtree_at(a, ia)
    sub_b, _ = subtree_at(b, ib)
    child_a = replace_at(a, ia, sub_b)
    child_b = replace_at(b, ib, sub_a)
    if depth(child_a) > max_depth:
        child_a = a
    if depth(child_b) > max_depth:
        child_b = b
    return child_a, child_b


def mutate(parent: Selector | Node, rng: np.random.Generator, max_depth: int = 7) -> Node:
    node = _as_node(parent)
    idx = int(rng.integers(size(node)))
    _, at_depth = subtree_at(node, idx)
    fresh = random_tree(max(0, max_depth - at_depth), GROW, rng)
    return replace_at(node, idx, fresh)


def breed(population: Sequence[FitnessRecord], config: GPConfig, rng: np.random.Generator,
          generation: int | None = None) -> list[Selector]:
    target = config.intermediate_factor * config.population_size
    out: list[Selector] = []
    while len(out) < target:
        if rng.random() < config.crossover_rate:
            pa = tournament_select(population, config.tournament_size, rng)
            pb = tournament_select(population, config.tournament_size, rng)
            for child in crossover(pa.selector, pb.selector, rng, config.max_depth):
                if len(out) < target:
                    out.append(Selector(child, generation=generation))
        else:
            pa = tournament_select(population, config.tournament_size, rng)
            out.append(Selector(mutate(pa.selector, rng, config.max_depth), generation=generation))
    return out


def preselect(
    intermediate: Sequence[Selector | Node | FitnessRecord],
    small_instances: Sequence[Instance] | FitnessEvaluator,
    population_size: int,
    node_budget: int = 5_000,
) -> list[FitnessRecord]:
    """Trial every candidate on the small instances and keep the best ``population_size``.

    The sort is stable, so candidates with equal trial fitness keep input order.
    """
    if len(intermediate) < population_size:
        raise ValueError("intermediate population smaller than population_size")
    evaluator = (
        small_instances
        if isinstance(small_instances, FitnessEvaluator)
        else FitnessEvaluator(small_instances, node_budget)
    )
    records = [
        c if isinstance(c, FitnessRecord) else FitnessRecord(c if isinstance(c, Selector) else Selector(c))
        for c in intermediate
    ]
    trial = evaluator.mean_fitness([r.selector for r in records])
    records = [replace(r, trial_fitness=f) for r, f in zip(records, trial)]
    ranked = sorted(records, key=lambda r: r.trial_fitness)
    return ranked[:population_size]


# ---------------------------------------------------------------------------
# main loop


def evolve(
    config: GPConfig,
    training_set: Sequence[Instance],
    small_set: Sequence[Instance],
    on_generation: Callable[[GenerationLog], None] | None = None,
) -> TrainingState:
    """Run the generational loop; generation 0 evaluates the initial population."""
    if not training_set or not small_set:
        raise ValueError("training and pre-selection sets must be non-empty")
    if config.sample_size > len(training_set):
        raise ValueError("sample_size exceeds training set size")
    if config.preselect_count > len(small_set):
        raise ValueError("preselect_count exceeds pre-selection set size")

    train_eval = FitnessEvaluator(training_set, config.node_budget, config.threads)
    trial_eval = FitnessEvaluator(list(small_set)[: config.preselect_count], config.preselect_node_budget,
                                  config.threads)
    trees = init_population(config, derived_rng(config.seed, _INIT))
    best: FitnessRecord | None = None
    entries: list[GenerationLog] = []
    population: list[FitnessRecord] = []

    for g in range(config.generations + 1):
        t0 = time.perf_counter()
        nodes0 = train_eval.nodes_used + trial_eval.nodes_used
        sample_rng = derived_rng(config.seed, g, _SAMPLE)
        subset = sorted(int(i) for i in sample_rng.choice(len(training_set), size=config.sample_size, replace=False))

        sampled = train_eval.mean_fitness(trees, subset)
        population = [FitnessRecord(t, sampled_fitness=f) for t, f in zip(trees, sampled)]
        gi = min(range(len(population)), key=lambda i: (population[i].sampled_fitness, i))
        gen_best = population[gi]
        gen_best.full_fitness = train_eval.mean_fitness([gen_best.selector])[0]
        if best is None or gen_best.full_fitness < best.full_fitness:
            best = replace(gen_best)

        if g < config.generations:
            offspring = breed(population, config, derived_rng(config.seed, g, _BREED), generation=g + 1)
            survivors = preselect(offspring, trial_eval, config.population_size)
            trees = [r.selector for r in survivors]

        entry = GenerationLog(
            generation=g,
            best_sampled_fitness=gen_best.sampled_fitness,
            gen_best_full_fitness=gen_best.full_fitness,
            best_so_far_full_fitness=best.full_fitness,
            nodes_used=train_eval.nodes_used + trial_eval.nodes_used - nodes0,
            elapsed_ms=int(round((time.perf_counter() - t0) * 1000)),
        )
        entries.append(entry)
        log.info(
            "gen %d sampled=%s full=%s best=%s nodes=%d",
            g, format_rational(entry.best_sampled_fitness), format_rational(entry.gen_best_full_fitness),
            format_rational(entry.best_so_far_full_fitness), entry.nodes_used,
        )
        if on_generation is not None:
            on_generation(entry)

    return TrainingState(population=population, generation=config.generations, best=best,
                         seed=config.seed, log=entries)
