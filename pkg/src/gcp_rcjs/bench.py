"""Brute-force oracle, baselines and the experiment matrix.

The oracle enumerates precedence-feasible job sequences and decodes each one
into a semi-active schedule (every job at its earliest feasible start given
the jobs placed before it). Total weighted tardiness is a regular objective,
so some sequence decodes to an optimal schedule.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .cp import SolverConfig, Status, build_model, solve
from .instance import (
    Instance,
    Schedule,
    Timeline,
    format_rational,
    total_weighted_tardiness,
)
from .selector import Selector, constant_selector, priorities_for

ORACLE_MAX_JOBS = 9

METHODS = ("default", "cp", "cp-warm", "single-pass", "oracle")


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    optimal_objective: Fraction
    optimal_schedule: Schedule
    enumerated_count: int


def brute_force_optimum(instance: Instance) -> OracleResult:
    """Exact optimum by exhaustive sequence enumeration (at most 9 jobs).

    Branches whose already-placed jobs are as tardy as the best complete
    schedule are cut; placed jobs never move, so their tardiness is final.
    """
    n = instance.n
    if n > ORACLE_MAX_JOBS:
        raise OracleTooLarge(f"oracle limited to {ORACLE_MAX_JOBS} jobs, instance has {n}")
    jobs = instance.jobs
    T = instance.horizon
    R = instance.resource_limit
    preds = instance.predecessors()

    starts = [0] * n
    placed: list[int] = []
    done = [False] * n
    best_obj: list[Fraction | None] = [None]
    best_starts: list[tuple[int, ...]] = [()]
    count = [0]

    def fits(j: int, t: int) -> bool:
        e = t + jobs[j].processing
        m = jobs[j].machine
        for k in placed:
            sk = starts[k]
            if sk < e and t < sk + jobs[k].processing and jobs[k].machine == m:
                return False
        for c in [t] + [starts[k] for k in placed if t < starts[k] < e]:
            use = jobs[j].resource
            for k in placed:
                if starts[k] <= c < starts[k] + jobs[k].processing:
                    use += jobs[k].resource
            if use > R:
                return False
        return True

    def earliest(j: int) -> int:
        ready = max([jobs[j].release] + [starts[i] + jobs[i].processing for i in preds[j]])
        ends = sorted({starts[k] + jobs[k].processing for k in placed} | {ready})
        for t in ends:
            if t >= ready and fits(j, t):
                return t
        raise AssertionError("unreachable")

    def rec(partial: Fraction) -> None:
        if len(placed) == n:
            count[0] += 1
            if best_obj[0] is None or partial < best_obj[0]:
                best_obj[0] = partial
                best_starts[0] = tuple(starts)
            return
        for j in range(n):
            if done[j] or any(not done[i] for i in preds[j]):
                continue
            t = earliest(j)
            if t + jobs[j].processing > T:
                continue
            late = t + jobs[j].processing - jobs[j].due
            cost = partial + (jobs[j].weight * late if late > 0 else 0)
            if best_obj[0] is not None and cost >= best_obj[0]:
                continue
            starts[j] = t
            done[j] = True
            placed.append(j)
            rec(cost)
            placed.pop()
            done[j] = False

    rec(Fraction(0))
    if best_obj[0] is None:
        raise ValueError("instance has no schedule within its horizon")
    return OracleResult(best_obj[0], Schedule(best_starts[0]), count[0])


def single_pass_construct(instance: Instance, selector: Selector | None = None,
                          priorities: Sequence | None = None) -> Schedule:
    """Priority list scheduling: highest-priority ready job goes next.

    Each job is placed at its earliest start respecting release, machine
    occupancy and the resource profile of already placed jobs.
    """
    if priorities is None:
        priorities = priorities_for(selector or constant_selector(), instance)
    preds = instance.predecessors()
    succs = instance.successors()
    waiting = [len(x) for x in preds]
    ready = {j for j in range(instance.n) if waiting[j] == 0}
    starts = [0] * instance.n
    tl = Timeline(instance)
    while ready:
        j = min(ready, key=lambda k: (-priorities[k], k))
        ready.remove(j)
        job = instance.jobs[j]
        est = max([job.release] + [starts[i] + instance.jobs[i].processing for i in preds[j]])
        starts[j] = tl.earliest(job, est)
        tl.place(job, starts[j])
        for k in succs[j]:
            waiting[k] -= 1
            if waiting[k] == 0:
                ready.add(k)
    return Schedule(tuple(starts))


def default_selector() -> Selector:
    """No learned tie-break: the search falls back to lowest job id."""
    return constant_selector()


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class ReportRow:
    instance_id: str
    machines: int
    jobs: int
    method: str
    objective: Fraction | None
    status: str
    nodes: int
    elapsed_ms: int


@dataclass(frozen=True)
class AggregateRow:
    machines: int
    method: str
    mean_objective: Fraction | None
    pct_optimal: Fraction
    n: int


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)

    @property
    def aggregates(self) -> list[AggregateRow]:
        groups: dict[tuple[int, str], list[ReportRow]] = {}
        for row in self.rows:
            groups.setdefault((row.machines, row.method), []).append(row)
        out = []
        for (machines, method), rows in sorted(groups.items(), key=lambda kv: (kv[0][0], METHODS.index(kv[0][1]))):
            objs = [r.objective for r in rows if r.objective is not None]
            mean = sum(objs, Fraction(0)) / len(objs) if objs else None
            opt = sum(1 for r in rows if r.status == Status.OPTIMAL.value)
            out.append(AggregateRow(machines, method, mean, Fraction(100 * opt, len(rows)), len(rows)))
        return out

    def objectives(self, method: str) -> dict[str, Fraction | None]:
        return {r.instance_id: r.objective for r in self.rows if r.method == method}

    def write_csv(self, rows_path, aggregate_path=None) -> None:
        with open(rows_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["instance_id", "machines", "jobs", "method", "objective", "status", "nodes", "elapsed_ms"])
            for r in self.rows:
                obj = "" if r.objective is None else format_rational(r.objective)
                w.writerow([r.instance_id, r.machines, r.jobs, r.method, obj, r.status, r.nodes, r.elapsed_ms])
        if aggregate_path is not None:
            with open(aggregate_path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["machines", "method", "mean_objective", "pct_optimal", "n"])
                for a in self.aggregates:
                    mean = "" if a.mean_objective is None else format_rational(a.mean_objective)
                    w.writerow([a.machines, a.method, mean, format_rational(a.pct_optimal), a.n])


def _run_cell(instance_id: str, instance: Instance, method: str, selector: Selector | None,
              node_budget: int, time_budget: float | None) -> ReportRow:
    t0 = time.perf_counter()
    if method == "oracle":
        res = brute_force_optimum(instance)
        obj, status, nodes = res.optimal_objective, Status.OPTIMAL.value, res.enumerated_count
    elif method == "single-pass":
        sched = single_pass_construct(instance, selector)
        obj, status, nodes = total_weighted_tardiness(instance, sched), Status.FEASIBLE.value, 0
    else:
        chosen = default_selector() if method == "default" else selector
        prios = priorities_for(chosen, instance)
        warm = single_pass_construct(instance, priorities=prios) if method == "cp-warm" else None
        cfg = SolverConfig(node_budget=node_budget, time_budget=time_budget, warm_start=warm)
        res = solve(build_model(instance), cfg, priorities=prios)
        obj, status, nodes = res.best_objective, res.status.value, res.stats.nodes
    elapsed = int(round((time.perf_counter() - t0) * 1000))
    return ReportRow(instance_id, instance.machines, instance.n, method, obj, status, nodes, elapsed)


def run_experiment(
    instances: Mapping[str, Instance] | Iterable[tuple[str, Instance]],
    methods: Sequence[str],
    node_budget: int = 50_000,
    selector: Selector | None = None,
    time_budget: float | None = None,
    threads: int = 1,
) -> ExperimentReport:
    """One solve per (instance, method); rows come back in input order."""
    items = list(instances.items() if isinstance(instances, Mapping) else instances)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {', '.join(METHODS)}")
        if m in ("cp", "cp-warm", "single-pass") and selector is None:
            raise ValueError(f"method {m!r} needs a selector file")
    if "oracle" in methods:
        for iid, inst in items:
            if inst.n > ORACLE_MAX_JOBS:
                raise OracleTooLarge(f"oracle requested on {iid} with {inst.n} jobs")
    cells = [(iid, inst, m) for iid, inst in items for m in methods]

    def run(cell):
        iid, inst, m = cell
        return _run_cell(iid, inst, m, selector, node_budget, time_budget)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, cells))
    else:
        rows = [run(c) for c in cells]
    return ExperimentReport(rows)
